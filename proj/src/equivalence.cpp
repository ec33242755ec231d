#include "lmplambda/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

namespace lmplambda {

// ---------------------------------------------------------------------------
// Monte Carlo test evaluation on the applicative LMP
// ---------------------------------------------------------------------------

namespace {

using ActionCache = std::map<const Test*, AppAction>;

void compile_actions(const TestPtr& t, ActionCache& cache) {
  if (auto* x = std::get_if<TConj>(&t->node)) {
    compile_actions(x->a, cache);
    compile_actions(x->b, cache);
    return;
  }
  if (auto* x = std::get_if<TAct>(&t->node)) {
    cache.emplace(t.get(), parse_action(x->label));
    compile_actions(x->rest, cache);
  }
}

double run_test(const AppState& s, const TestPtr& t, const ActionCache& cache, RngStream& rng,
                long fuel, LanguageMode mode) {
  if (std::holds_alternative<TOmega>(t->node)) return 1.0;
  if (auto* x = std::get_if<TConj>(&t->node)) {
    // independent copies branching from the same state snapshot
    uint64_t u = rng.next_u64();
    RngStream ra = rng.split(u);
    RngStream rb = rng.split(~u);
    double wa = run_test(s, x->a, cache, ra, fuel, mode);
    double wb = run_test(s, x->b, cache, rb, fuel, mode);
    return wa * wb;
  }
  const auto& act = std::get<TAct>(t->node);
  AppStep step = app_step(s, cache.at(t.get()), mode);
  if (std::holds_alternative<StepNull>(step.node)) return 0.0;
  if (auto* d = std::get_if<StepDirac>(&step.node))
    return run_test(d->to, act.rest, cache, rng, fuel, mode);
  if (auto* w = std::get_if<StepWeighted>(&step.node)) {
    if (w->weight == 0.0) return 0.0;
    return w->weight * run_test(w->to, act.rest, cache, rng, fuel, mode);
  }
  const auto& ev = std::get<StepEval>(step.node);
  EvalOutcome out = eval_sample(ev.term, fuel, rng);
  if (!out.converged) return 0.0;
  return run_test(AppState::of_value(out.value, ev.type), act.rest, cache, rng, fuel, mode);
}

} // namespace

McEstimate test_success_mc(const AppState& s, const TestPtr& t, size_t samples, long fuel,
                           uint64_t seed, uint64_t stream, LanguageMode mode) {
  ActionCache cache;
  compile_actions(t, cache);
  RngStream base(seed, stream);
  double sum = 0, sumsq = 0;
  for (size_t i = 0; i < samples; ++i) {
    RngStream r = base.split(i);
    double w = run_test(s, t, cache, r, fuel, mode);
    sum += w;
    sumsq += w * w;
  }
  McEstimate e;
  e.samples = samples;
  e.mean = sum / (double)samples;
  double var = std::max(0.0, sumsq / (double)samples - e.mean * e.mean);
  e.half = 3.0 * std::sqrt(var / (double)samples);
  return e;
}

double test_success_grid(const AppState& s, const TestPtr& t, long fuel, int grid_points,
                         int max_draws, LanguageMode mode) {
  ActionCache cache;
  compile_actions(t, cache);
  std::function<double(const AppState&, const TestPtr&)> rec =
      [&](const AppState& st, const TestPtr& tt) -> double {
    if (std::holds_alternative<TOmega>(tt->node)) return 1.0;
    if (auto* x = std::get_if<TConj>(&tt->node)) return rec(st, x->a) * rec(st, x->b);
    const auto& act = std::get<TAct>(tt->node);
    AppStep step = app_step(st, cache.at(tt.get()), mode);
    if (std::holds_alternative<StepNull>(step.node)) return 0.0;
    if (auto* d = std::get_if<StepDirac>(&step.node)) return rec(d->to, act.rest);
    if (auto* w = std::get_if<StepWeighted>(&step.node))
      return w->weight == 0.0 ? 0.0 : w->weight * rec(w->to, act.rest);
    const auto& ev = std::get<StepEval>(step.node);
    DiscreteMeasure dist = exact_eval_grid(ev.term, fuel, grid_points, max_draws);
    double sum = 0;
    for (const auto& atom : dist.atoms)
      sum += atom.weight * rec(AppState::of_value(atom.value, ev.type), act.rest);
    return sum;
  };
  return rec(s, t);
}

// ---------------------------------------------------------------------------
// canonical test enumeration
// ---------------------------------------------------------------------------

namespace {

struct TestEnumerator {
  int depth;
  std::vector<Rational> grid;
  size_t bucket_cap = 4096;
  std::map<std::string, std::vector<TestPtr>> memo;

  std::string key(bool value_kind, const TypePtr& ty, int size) {
    return (value_kind ? "v|" : "t|") + print_type(ty) + "|" + std::to_string(size);
  }

  const std::vector<TestPtr>& bucket(bool value_kind, const TypePtr& ty, int size) {
    std::string k = key(value_kind, ty, size);
    auto it = memo.find(k);
    if (it != memo.end()) return it->second;
    std::vector<TestPtr> out;
    if (size == 0) {
      out.push_back(t_omega());
      return memo.emplace(std::move(k), std::move(out)).first->second;
    }
    struct Arc {
      std::string label;
      bool next_kind;
      TypePtr next_type;
    };
    std::vector<Arc> arcs;
    if (!value_kind) {
      arcs.push_back({"eval", true, ty});
    } else if (std::holds_alternative<TReal>(ty->node)) {
      for (const auto& q : grid) arcs.push_back({"leq:" + q.print(), true, ty});
    } else if (auto* sum = std::get_if<TSum>(&ty->node)) {
      for (const auto& [tag, comp] : sum->variants) arcs.push_back({"case:" + tag, true, comp});
    } else if (auto* mu = std::get_if<TMu>(&ty->node)) {
      arcs.push_back({"unbox", true, type_subst(mu->body, mu->var, ty)});
    } else if (auto* ar = std::get_if<TArrow>(&ty->node)) {
      for (const auto& v : enumerate_rational_values(ar->from, depth, grid))
        arcs.push_back({"pass:{" + print_value(v) + "}", false, ar->to});
    }
    for (const auto& arc : arcs) {
      const auto& rests = bucket(arc.next_kind, arc.next_type, size - 1);
      for (const auto& r : rests) {
        if (out.size() >= bucket_cap) break;
        out.push_back(t_act(arc.label, r));
      }
    }
    for (int i = 1; i + 1 < size; ++i) {
      int j = size - 1 - i;
      if (i > j) break;
      const auto& left = bucket(value_kind, ty, i);
      const auto& right = bucket(value_kind, ty, j);
      for (const auto& t1 : left) {
        for (const auto& t2 : right) {
          if (out.size() >= bucket_cap) break;
          if (i == j && print_test(t2) < print_test(t1)) continue;
          out.push_back(t_conj(t1, t2));
        }
      }
    }
    std::sort(out.begin(), out.end(), [](const TestPtr& a, const TestPtr& b) {
      return print_test(a) < print_test(b);
    });
    return memo.emplace(std::move(k), std::move(out)).first->second;
  }
};

} // namespace

std::vector<TestPtr> enumerate_tests(bool value_kind, const TypePtr& ty, int depth,
                                     const std::vector<Rational>& grid, size_t budget) {
  TestEnumerator en;
  en.depth = depth;
  en.grid = grid;
  std::vector<TestPtr> out;
  for (int size = 0; out.size() < budget && size <= 16; ++size) {
    const auto& b = en.bucket(value_kind, ty, size);
    for (const auto& t : b) {
      if (out.size() >= budget) break;
      out.push_back(t);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

Json EquivalenceReport::to_json() const {
  Json j;
  j["verdict"] = verdict;
  j["witness"] = witness;
  j["budget"] = budget;
  j["seeds"] = seeds;
  j["max_gap"] = max_gap;
  return j;
}

EquivalenceReport distinguish_by_tests(const AppState& a, const AppState& b,
                                       const CompareOptions& opt) {
  if (!type_equal(a.type, b.type))
    throw TypeError("distinguish_by_tests: states have different types");
  if (a.is_value != b.is_value)
    throw TypeError("distinguish_by_tests: states have different kinds");
  std::vector<TestPtr> tests =
      enumerate_tests(a.is_value, a.type, opt.depth, opt.grid, opt.test_budget);
  EquivalenceReport rep;
  rep.seeds = {opt.seed};
  rep.budget = Json{{"tests", tests.size()},
                    {"samples_per_test", opt.test_samples},
                    {"depth", opt.depth}};
  for (size_t k = 0; k < tests.size(); ++k) {
    uint64_t sa = 500000 + 2 * (uint64_t)k, sb = sa + 1;
    McEstimate ea = test_success_mc(a, tests[k], opt.test_samples, opt.fuel, opt.seed, sa,
                                    opt.mode);
    McEstimate eb = test_success_mc(b, tests[k], opt.test_samples, opt.fuel, opt.seed, sb,
                                    opt.mode);
    double gap = std::fabs(ea.mean - eb.mean);
    double denom = std::max(std::sqrt(ea.half * ea.half + eb.half * eb.half) / 3.0, 1e-12);
    rep.max_gap = std::max(rep.max_gap, gap / denom);
    if (gap > ea.half + eb.half) {
      rep.verdict = "DISTINGUISHED";
      rep.witness = Json{{"kind", "test"},        {"test", print_test(tests[k])},
                         {"mean_a", ea.mean},     {"ci_half_a", ea.half},
                         {"mean_b", eb.mean},     {"ci_half_b", eb.half},
                         {"stream_a", sa},        {"stream_b", sb}};
      return rep;
    }
  }
  rep.verdict = "NOT_SEPARATED_WITHIN_BUDGET";
  return rep;
}

// ---------------------------------------------------------------------------
// observable contexts
// ---------------------------------------------------------------------------

std::vector<ObservableContext> default_context_battery(const TypePtr& hole_type) {
  std::vector<ObservableContext> out;
  auto add = [&](const std::string& name, const std::string& src) {
    out.push_back({name, src, parse_term(src)});
  };
  if (type_equal(hole_type, t_real())) {
    add("identity", "[.]");
    add("square", "let x = [.] in mul(x, x)");
    return out;
  }
  if (type_equal(hole_type, t_arrow(t_real(), t_real()))) {
    for (const std::string& q : {"0.0", "0.25", "0.5", "0.75", "1.0"}) {
      add("selfapp_" + q, "(lam z: (real -> real). z (z " + q + ")) [.]");
      add("apply_" + q, "(lam z: (real -> real). z " + q + ") [.]");
    }
  }
  return out;
}

EmpiricalMeasure context_apply_estimate(const TermPtr& ctx, const TermPtr& m, size_t samples,
                                        long fuel, uint64_t seed, uint64_t stream,
                                        LanguageMode mode) {
  TermPtr grafted = graft(ctx, m);
  TypePtr ty = typecheck({}, grafted, mode);
  if (!type_equal(ty, t_real()))
    throw TypeError("context composition is not real-typed: " + print_type(ty));
  return estimate(grafted, samples, fuel, seed, stream);
}

std::optional<Json> empirical_distinct(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                                       double alpha, double* max_gap) {
  auto upd = [&](double gap, double s1, double s2) {
    if (!max_gap) return;
    *max_gap = std::max(*max_gap, gap / std::max(std::sqrt(s1 * s1 + s2 * s2), 1e-12));
  };
  double n = (double)a.samples, m = (double)b.samples;
  double pa = a.mass(), pb = b.mass();
  double sa = std::sqrt(pa * (1 - pa) / n), sb = std::sqrt(pb * (1 - pb) / m);
  upd(std::fabs(pa - pb), sa, sb);
  if (std::fabs(pa - pb) > 3 * (sa + sb))
    return Json{{"kind", "mass"}, {"mass_a", pa}, {"mass_b", pb}};

  size_t minc = std::max<size_t>(5, (size_t)std::min(n, m) / 20000);
  std::map<std::string, double> wa, wb;
  for (const auto& [k, w] : a.atoms(1)) wa[k] = w;
  for (const auto& [k, w] : b.atoms(1)) wb[k] = w;
  std::set<std::string> candidates;
  for (const auto& [k, w] : a.atoms(minc)) candidates.insert(k);
  for (const auto& [k, w] : b.atoms(minc)) candidates.insert(k);
  for (const auto& k : candidates) {
    double qa = wa.count(k) ? wa[k] : 0.0;
    double qb = wb.count(k) ? wb[k] : 0.0;
    double ca = 3 * std::sqrt(qa * (1 - qa) / n), cb = 3 * std::sqrt(qb * (1 - qb) / m);
    upd(std::fabs(qa - qb), ca / 3, cb / 3);
    if (std::fabs(qa - qb) > ca + cb)
      return Json{{"kind", "atom"}, {"value", k}, {"weight_a", qa}, {"weight_b", qb}};
  }

  bool real_typed = a.type && b.type && type_equal(a.type, t_real()) && type_equal(b.type, t_real());
  if (real_typed) {
    std::vector<double> excl;
    for (const auto& k : candidates) excl.push_back(std::strtod(k.c_str(), nullptr));
    std::vector<double> ra = a.reals_excluding(excl), rb = b.reals_excluding(excl);
    if (ra.size() >= 50 && rb.size() >= 50) {
      KsDecision ks = ks_two_sample(ra, rb, alpha);
      if (max_gap) *max_gap = std::max(*max_gap, ks.statistic / ks.threshold);
      if (!ks.accept)
        return Json{{"kind", "ks"},
                    {"statistic", ks.statistic},
                    {"threshold", ks.threshold},
                    {"n", ks.n},
                    {"m", ks.m}};
    }
  }
  return std::nullopt;
}

EquivalenceReport compare_programs(const TermPtr& m, const TermPtr& n,
                                   const CompareOptions& opt) {
  TypePtr tm = typecheck({}, m, opt.mode);
  TypePtr tn = typecheck({}, n, opt.mode);
  if (!type_equal(tm, tn))
    throw TypeError("compare: programs have different types: " + print_type(tm) + " vs " +
                    print_type(tn));
  EquivalenceReport rep;
  rep.seeds = {opt.seed};
  if (term_equal(m, n)) {
    rep.verdict = "EQUAL_EXACT";
    rep.budget = Json{{"tests", 0}, {"contexts", 0}};
    return rep;
  }
  size_t tests_used = 0;
  if (opt.use_tests) {
    EquivalenceReport tr =
        distinguish_by_tests(AppState::of_term(m, tm), AppState::of_term(n, tn), opt);
    tests_used = tr.budget["tests"].get<size_t>();
    rep.max_gap = std::max(rep.max_gap, tr.max_gap);
    if (tr.verdict == "DISTINGUISHED") {
      tr.budget["contexts"] = 0;
      return tr;
    }
  }
  std::vector<ObservableContext> battery;
  if (opt.use_contexts) battery = default_context_battery(tm);
  double alpha = opt.alpha / std::max<size_t>(1, battery.size());
  for (size_t k = 0; k < battery.size(); ++k) {
    uint64_t sa = 800000 + 2 * (uint64_t)k, sb = sa + 1;
    EmpiricalMeasure am =
        context_apply_estimate(battery[k].ctx, m, opt.samples, opt.fuel, opt.seed, sa, opt.mode);
    EmpiricalMeasure bn =
        context_apply_estimate(battery[k].ctx, n, opt.samples, opt.fuel, opt.seed, sb, opt.mode);
    auto finding = empirical_distinct(am, bn, alpha, &rep.max_gap);
    if (finding) {
      rep.verdict = "DISTINGUISHED";
      rep.witness = Json{{"kind", "context"},
                         {"name", battery[k].name},
                         {"context", battery[k].source},
                         {"finding", *finding},
                         {"stream_a", sa},
                         {"stream_b", sb}};
      rep.budget = Json{{"tests", tests_used}, {"contexts", battery.size()},
                        {"samples", opt.samples}};
      return rep;
    }
  }
  rep.verdict = "NOT_SEPARATED_WITHIN_BUDGET";
  rep.budget =
      Json{{"tests", tests_used}, {"contexts", battery.size()}, {"samples", opt.samples}};
  return rep;
}

// ---------------------------------------------------------------------------
// shipped examples and the claim battery
// ---------------------------------------------------------------------------

namespace corpus {

TermPtr uniform_program() { return m_sample(); }

TermPtr normal_std_program() { return sugar::normal_std(); }

TermPtr bernoulli_fair_program() {
  return sugar::bernoulli(m_val(v_real(0.0)), m_val(v_real(1.0)), m_val(v_real(0.5)));
}

TermPtr ce_state_M() {
  return parse_term("let x = sample in lam y: real. if eq(x, y) then 1.0 else 0.0");
}

TermPtr ce_state_N() { return parse_term("let x = sample in lam y: real. 0.0"); }

TermPtr ce_soundness_M() {
  return parse_term(
      "let x = sample in lam y: real. bernoulli(if eq(x, y) then 1.0 else 0.0, x, 0.5)");
}

TermPtr ce_soundness_N() {
  return parse_term("let x = sample in lam y: real. bernoulli(0.0, x, 0.5)");
}

TermPtr self_app_context() { return parse_term("(lam z: (real -> real). z (z 1.0)) [.]"); }

} // namespace corpus

namespace {

double uniform_cdf(double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); }

} // namespace

Json corpus_check(const CorpusOptions& opt) {
  Json out;
  out["config"] = Json{{"samples", opt.samples},
                       {"test_samples", opt.test_samples},
                       {"fuel", opt.fuel},
                       {"seed", opt.seed},
                       {"test_budget", opt.test_budget}};
  Json claims = Json::array();
  bool all = true;
  auto push = [&](const std::string& name, bool pass, Json details) {
    details["name"] = name;
    details["pass"] = pass;
    claims.push_back(details);
    all = all && pass;
  };

  {
    EmpiricalMeasure e = estimate(corpus::uniform_program(), opt.samples, opt.fuel, opt.seed, 10);
    KsDecision ks = ks_one_sample(e.reals(), uniform_cdf, 0.01);
    push("uniform_ks", ks.accept && e.mass() == 1.0,
         Json{{"ks", ks.to_json()}, {"mass", e.mass()}});
  }
  {
    EmpiricalMeasure e =
        estimate(corpus::normal_std_program(), opt.samples, opt.fuel, opt.seed, 11);
    KsDecision ks = ks_one_sample(e.reals(), std_normal_cdf, 0.01);
    push("normal_std_ks", ks.accept && e.mass() == 1.0,
         Json{{"ks", ks.to_json()}, {"mass", e.mass()}});
  }
  {
    EmpiricalMeasure e =
        estimate(corpus::bernoulli_fair_program(), opt.samples, opt.fuel, opt.seed, 12);
    double w0 = e.atom_weight(v_real(0.0));
    double w1 = e.atom_weight(v_real(1.0));
    double ci = 3 * std::sqrt(0.25 / (double)opt.samples);
    bool pass = std::fabs(w0 - 0.5) <= ci && std::fabs(w1 - 0.5) <= ci &&
                std::fabs(w0 + w1 - 1.0) <= 1e-12;
    push("bernoulli_fair", pass, Json{{"weight_0", w0}, {"weight_1", w1}, {"ci", ci}});
  }
  {
    TermPtr C = corpus::self_app_context();
    EmpiricalMeasure am = context_apply_estimate(C, corpus::ce_soundness_M(), opt.samples,
                                                 opt.fuel, opt.seed, 13);
    EmpiricalMeasure bn = context_apply_estimate(C, corpus::ce_soundness_N(), opt.samples,
                                                 opt.fuel, opt.seed, 14);
    double m1 = am.atom_weight(v_real(1.0)), m0 = am.atom_weight(v_real(0.0));
    double n1 = bn.atom_weight(v_real(1.0)), n0 = bn.atom_weight(v_real(0.0));
    KsDecision ksm = ks_one_sample(am.reals_excluding({0.0, 1.0}), uniform_cdf, 0.01);
    KsDecision ksn = ks_one_sample(bn.reals_excluding({0.0, 1.0}), uniform_cdf, 0.01);
    bool pass = std::fabs(m1 - 0.25) <= 0.01 && n1 <= 0.005 && std::fabs(m0 - 0.25) <= 0.01 &&
                std::fabs(n0 - 0.5) <= 0.01 && ksm.accept && ksn.accept;
    push("ce_soundness_context", pass,
         Json{{"atom1_M", m1},
              {"atom1_N", n1},
              {"atom0_M", m0},
              {"atom0_N", n0},
              {"ks_rest_M", ksm.to_json()},
              {"ks_rest_N", ksn.to_json()}});
  }
  CompareOptions copt;
  copt.samples = opt.samples;
  copt.test_samples = opt.test_samples;
  copt.fuel = opt.fuel;
  copt.seed = opt.seed;
  copt.test_budget = opt.test_budget;
  {
    TypePtr ty = t_arrow(t_real(), t_real());
    EquivalenceReport rep = distinguish_by_tests(
        AppState::of_term(corpus::ce_soundness_M(), ty),
        AppState::of_term(corpus::ce_soundness_N(), ty), copt);
    push("ce_soundness_tests", rep.verdict == "NOT_SEPARATED_WITHIN_BUDGET", rep.to_json());
  }
  {
    EquivalenceReport rep =
        compare_programs(corpus::ce_state_M(), corpus::ce_state_N(), copt);
    push("ce_state", rep.verdict == "NOT_SEPARATED_WITHIN_BUDGET", rep.to_json());
  }
  out["claims"] = claims;
  out["all_pass"] = all;
  return out;
}

} // namespace lmplambda
