#include "lmplambda/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

namespace lmplambda {

// ---------------------------------------------------------------------------
// evaluator
// ---------------------------------------------------------------------------

namespace {

double real_of(const ValuePtr& v) {
  if (auto* x = std::get_if<VReal>(&v->node)) return x->r;
  throw std::runtime_error("evaluator: expected a real literal, got " + print_value(v));
}

} // namespace

EvalOutcome eval_with_draws(const TermPtr& m0, long fuel, DrawSource& src) {
  TermPtr m = m0;
  while (true) {
    if (fuel <= 0) return {};
    if (auto* x = std::get_if<TVal>(&m->node)) return {true, x->v};
    if (std::holds_alternative<TSample>(m->node)) return {true, v_real(src.draw())};
    if (auto* x = std::get_if<TPrimC>(&m->node)) {
      std::vector<double> args;
      args.reserve(x->args.size());
      for (const auto& a : x->args) args.push_back(real_of(a));
      m = m_val(v_real(prim_apply(x->name, args)));
      --fuel;
      continue;
    }
    if (auto* x = std::get_if<TPrimB>(&m->node)) {
      std::vector<double> args;
      args.reserve(x->args.size());
      for (const auto& a : x->args) args.push_back(real_of(a));
      m = m_val(bool_test_apply(x->name, args) ? sugar::true_value() : sugar::false_value());
      --fuel;
      continue;
    }
    if (auto* x = std::get_if<TApp>(&m->node)) {
      auto* lam = std::get_if<VLam>(&x->fn->node);
      if (!lam) throw std::runtime_error("evaluator: application of a non-function");
      m = substitute(lam->body, lam->var, x->arg);
      --fuel;
      continue;
    }
    if (auto* x = std::get_if<TCase>(&m->node)) {
      auto* inj = std::get_if<VInj>(&x->scrutinee->node);
      if (!inj) throw std::runtime_error("evaluator: case on a non-injection");
      const CaseBranch* hit = nullptr;
      for (const auto& br : x->branches)
        if (br.tag == inj->tag) hit = &br;
      if (!hit) throw std::runtime_error("evaluator: no branch for tag " + inj->tag);
      m = substitute(hit->body, hit->var, inj->payload);
      --fuel;
      continue;
    }
    if (auto* x = std::get_if<TLet>(&m->node)) {
      EvalOutcome bound = eval_with_draws(x->bound, fuel - 1, src);
      if (!bound.converged) return {};
      m = substitute(x->body, x->var, bound.value);
      --fuel;
      continue;
    }
    if (auto* x = std::get_if<TUnfold>(&m->node)) {
      auto* f = std::get_if<VFold>(&x->v->node);
      if (!f) throw std::runtime_error("evaluator: unfold of a non-fold value");
      m = m_val(f->payload);
      --fuel;
      continue;
    }
    throw std::runtime_error("evaluator: context hole in a program");
  }
}

EvalOutcome eval_sample(const TermPtr& m, long fuel, RngStream& rng) {
  RngDraws src(rng);
  return eval_with_draws(m, fuel, src);
}

// ---------------------------------------------------------------------------
// estimation
// ---------------------------------------------------------------------------

std::vector<double> EmpiricalMeasure::reals() const {
  std::vector<double> out;
  out.reserve(converged.size());
  for (const auto& v : converged) {
    auto* x = std::get_if<VReal>(&v->node);
    if (!x) throw std::runtime_error("measure holds non-real values");
    out.push_back(x->r);
  }
  return out;
}

double EmpiricalMeasure::atom_weight(const ValuePtr& v) const {
  size_t k = 0;
  for (const auto& w : converged)
    if (value_equal(w, v)) ++k;
  return samples ? (double)k / (double)samples : 0.0;
}

std::vector<double> EmpiricalMeasure::reals_excluding(const std::vector<double>& atoms) const {
  std::vector<double> out;
  for (const auto& v : converged) {
    double r = std::get<VReal>(v->node).r;
    bool hit = false;
    for (double a : atoms)
      if (r == a) hit = true;
    if (!hit) out.push_back(r);
  }
  return out;
}

std::vector<std::pair<std::string, double>> EmpiricalMeasure::atoms(size_t min_count) const {
  std::map<std::string, size_t> counts;
  for (const auto& v : converged) ++counts[print_value(v)];
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [k, c] : counts)
    if (c >= min_count) out.emplace_back(k, (double)c / (double)samples);
  return out;
}

EmpiricalMeasure estimate(const TermPtr& program, size_t samples, long fuel, uint64_t seed,
                          uint64_t stream, unsigned workers) {
  EmpiricalMeasure out;
  out.type = typecheck({}, program);
  out.seed = seed;
  out.samples = samples;
  out.fuel = fuel;

  RngStream base(seed, stream);
  std::vector<ValuePtr> slots(samples);
  if (workers == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    workers = hw ? std::min(hw, 8u) : 1u;
  }
  if (samples < 4096) workers = 1;

  auto run_range = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i) {
      RngStream s = base.split(i);
      EvalOutcome r = eval_sample(program, fuel, s);
      if (r.converged) slots[i] = r.value;
    }
  };
  if (workers <= 1) {
    run_range(0, samples);
  } else {
    std::vector<std::thread> pool;
    size_t chunk = (samples + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      size_t lo = std::min((size_t)w * chunk, samples);
      size_t hi = std::min(lo + chunk, samples);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& t : pool) t.join();
  }
  out.converged.reserve(samples);
  for (auto& v : slots)
    if (v) out.converged.push_back(std::move(v));
  return out;
}

Json measure_report(const EmpiricalMeasure& m, size_t real_cap) {
  Json j;
  j["type"] = print_type(m.type);
  j["mass"] = m.mass();
  Json atoms = Json::array();
  for (const auto& [val, w] : m.atoms())
    atoms.push_back(Json{{"value", val}, {"weight", w}});
  j["atoms"] = atoms;
  if (std::holds_alternative<TReal>(m.type->node)) {
    std::vector<double> rs = m.reals();
    Json capped = Json::array();
    for (size_t i = 0; i < rs.size() && i < real_cap; ++i) capped.push_back(rs[i]);
    j["real_samples"] = capped;
    if (!rs.empty()) {
      std::vector<double> sorted = rs;
      std::sort(sorted.begin(), sorted.end());
      auto q = [&](double p) { return sorted[std::min(sorted.size() - 1, (size_t)(p * sorted.size()))]; };
      j["quantiles"] = Json{{"q01", q(0.01)}, {"q25", q(0.25)}, {"q50", q(0.5)},
                            {"q75", q(0.75)}, {"q99", q(0.99)}};
    }
  }
  j["seed"] = m.seed;
  j["samples"] = m.samples;
  j["fuel"] = m.fuel;
  return j;
}

// ---------------------------------------------------------------------------
// midpoint-grid quadrature
// ---------------------------------------------------------------------------

double DiscreteMeasure::mass() const {
  double s = 0;
  for (const auto& a : atoms) s += a.weight;
  return s;
}

double DiscreteMeasure::atom_weight(const ValuePtr& v) const {
  for (const auto& a : atoms)
    if (value_equal(a.value, v)) return a.weight;
  return 0.0;
}

namespace {

void grid_rec(const TermPtr& program, long fuel, int m, int max_draws,
              std::vector<double>& prefix, double weight,
              std::map<std::string, WeightedValue>& out) {
  ListDraws src(prefix);
  EvalOutcome r;
  bool need_more = false;
  try {
    r = eval_with_draws(program, fuel, src);
  } catch (const NeedMoreDraws&) {
    need_more = true;
  }
  if (need_more) {
    if ((int)prefix.size() >= max_draws)
      throw std::runtime_error("exact_eval_grid: program exceeds the draw bound of " +
                               std::to_string(max_draws));
    for (int i = 0; i < m; ++i) {
      prefix.push_back((i + 0.5) / m);
      grid_rec(program, fuel, m, max_draws, prefix, weight / m, out);
      prefix.pop_back();
    }
    return;
  }
  if (!r.converged) return;
  std::string key = print_value(r.value);
  auto it = out.find(key);
  if (it == out.end())
    out.emplace(key, WeightedValue{r.value, weight});
  else
    it->second.weight += weight;
}

} // namespace

DiscreteMeasure exact_eval_grid(const TermPtr& program, long fuel, int grid_points,
                                int max_draws) {
  if (grid_points < 1) throw std::runtime_error("exact_eval_grid: need at least one cell");
  std::map<std::string, WeightedValue> acc;
  std::vector<double> prefix;
  grid_rec(program, fuel, grid_points, max_draws, prefix, 1.0, acc);
  DiscreteMeasure out;
  out.atoms.reserve(acc.size());
  for (auto& [k, wv] : acc) out.atoms.push_back(std::move(wv));
  return out;
}

double tv_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::map<std::string, double> diff;
  for (const auto& wv : a.atoms) diff[print_value(wv.value)] += wv.weight;
  for (const auto& wv : b.atoms) diff[print_value(wv.value)] -= wv.weight;
  double s = 0;
  for (const auto& [k, d] : diff) s += std::fabs(d);
  s += std::fabs((1.0 - a.mass()) - (1.0 - b.mass()));
  return 0.5 * s;
}

} // namespace lmplambda
