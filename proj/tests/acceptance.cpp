// End-to-end acceptance checks. Each criterion prints exactly one line:
//   criterion N: PASS - summary (T s)
// The process exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lmplambda/equivalence.hpp"
#include "lmplambda/generators.hpp"
#include "lmplambda/measures.hpp"
#include "lmplambda/semantics.hpp"

using namespace lmplambda;

namespace {

std::string g_corpus_dir = "corpus";
int g_failures = 0;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TermPtr load_program(const std::string& name) {
  return parse_term(slurp(g_corpus_dir + "/" + name));
}

double uniform_cdf(double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); }

void criterion(int n, const std::string& what, const std::function<bool(std::string&)>& body) {
  auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!ok) ++g_failures;
  std::printf("criterion %d: %s - %s (%.1f s)%s%s\n", n, ok ? "PASS" : "FAIL", what.c_str(),
              secs, detail.empty() ? "" : " ", detail.c_str());
  std::fflush(stdout);
}

bool ks_claim(const TermPtr& program, uint64_t stream,
              const std::function<double(double)>& cdf, std::string& detail) {
  EmpiricalMeasure e = estimate(program, 100000, 10000, 1, stream);
  if (e.mass() != 1.0) {
    detail = "mass " + std::to_string(e.mass());
    return false;
  }
  KsDecision ks = ks_one_sample(e.reals(), cdf, 0.01);
  if (!ks.accept)
    detail = "ks statistic " + std::to_string(ks.statistic) + " > threshold " +
             std::to_string(ks.threshold);
  return ks.accept;
}

} // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--corpus-dir" && i + 1 < argc) g_corpus_dir = argv[++i];
  }

  criterion(1, "uniform sampler matches the uniform law", [&](std::string& detail) {
    return ks_claim(load_program("uniform.lp"), 10, uniform_cdf, detail);
  });

  criterion(2, "box-muller sampler matches the standard normal law", [&](std::string& detail) {
    return ks_claim(load_program("normal_std.lp"), 11, std_normal_cdf, detail);
  });

  criterion(3, "fair choice puts half the mass on each branch", [&](std::string& detail) {
    EmpiricalMeasure e = estimate(load_program("bernoulli_fair.lp"), 100000, 10000, 1, 12);
    double w0 = e.atom_weight(v_real(0.0));
    double w1 = e.atom_weight(v_real(1.0));
    double ci = 3 * std::sqrt(0.25 / 100000.0);
    bool ok = e.mass() == 1.0 && std::fabs(w0 - 0.5) <= ci && std::fabs(w1 - 0.5) <= ci &&
              std::fabs(w0 + w1 - 1.0) <= 1e-12;
    if (!ok)
      detail = "w0 " + std::to_string(w0) + ", w1 " + std::to_string(w1) + ", ci " +
               std::to_string(ci);
    return ok;
  });

  criterion(4, "self-application separates the key-revealing pair", [&](std::string& detail) {
    TermPtr C = load_program("ctx_selfapp.lp");
    EmpiricalMeasure am =
        context_apply_estimate(C, load_program("ce_soundness_M.lp"), 100000, 10000, 1, 13);
    EmpiricalMeasure bn =
        context_apply_estimate(C, load_program("ce_soundness_N.lp"), 100000, 10000, 1, 14);
    double m1 = am.atom_weight(v_real(1.0)), m0 = am.atom_weight(v_real(0.0));
    double n1 = bn.atom_weight(v_real(1.0)), n0 = bn.atom_weight(v_real(0.0));
    KsDecision ksm = ks_one_sample(am.reals_excluding({0.0, 1.0}), uniform_cdf, 0.01);
    KsDecision ksn = ks_one_sample(bn.reals_excluding({0.0, 1.0}), uniform_cdf, 0.01);
    bool ok = std::fabs(m1 - 0.25) <= 0.01 && std::fabs(m0 - 0.25) <= 0.01 && n1 <= 0.005 &&
              std::fabs(n0 - 0.5) <= 0.01 && ksm.accept && ksn.accept;
    if (!ok)
      detail = "atoms M(1,0)=(" + std::to_string(m1) + "," + std::to_string(m0) + ") N(1,0)=(" +
               std::to_string(n1) + "," + std::to_string(n0) + ")";
    return ok;
  });

  criterion(5, "no budgeted test separates the key-revealing pair", [&](std::string& detail) {
    CompareOptions opt;
    TypePtr ty = t_arrow(t_real(), t_real());
    EquivalenceReport rep =
        distinguish_by_tests(AppState::of_term(load_program("ce_soundness_M.lp"), ty),
                             AppState::of_term(load_program("ce_soundness_N.lp"), ty), opt);
    if (rep.verdict != "NOT_SEPARATED_WITHIN_BUDGET") {
      detail = "verdict " + rep.verdict + ", witness " + rep.witness.dump();
      return false;
    }
    return true;
  });

  criterion(6, "tests and contexts both miss the secret-state pair", [&](std::string& detail) {
    CompareOptions opt;
    EquivalenceReport rep =
        compare_programs(load_program("ce_state_M.lp"), load_program("ce_state_N.lp"), opt);
    if (rep.verdict != "NOT_SEPARATED_WITHIN_BUDGET") {
      detail = "verdict " + rep.verdict + ", witness " + rep.witness.dump();
      return false;
    }
    return true;
  });

  criterion(7, "logic, tests, and refinement agree on 500 random finite models",
            [&](std::string& detail) {
              RngStream rng(2024, 700);
              for (int i = 0; i < 500; ++i) {
                FiniteLMP l = random_finite_lmp(rng, 8, 3);
                int d = (int)l.states.size();
                EquivRelation bis = state_bisim_finite(l);
                EquivRelation logic = logical_equiv_finite(l, d);
                EquivRelation tests = test_equiv_finite(l, d);
                for (size_t a = 0; a < l.states.size(); ++a)
                  for (size_t b = 0; b < l.states.size(); ++b) {
                    bool br = bis.related((int)a, (int)b);
                    if (br != logic.related((int)a, (int)b) ||
                        br != tests.related((int)a, (int)b)) {
                      detail = "model " + std::to_string(i) + " states " + l.states[a] + "," +
                               l.states[b] + ": " + l.to_json().dump();
                      return false;
                    }
                  }
              }
              return true;
            });

  criterion(8, "blockwise lifting and coupling feasibility coincide", [&](std::string& detail) {
    GammaThetaReport eq = check_gamma_eq_theta(6, 10000, 2024);
    GammaThetaReport sub = check_theta_subset_gamma(6, 10000, 2025);
    if (eq.disagreements || sub.disagreements) {
      detail = "first disagreement " +
               (eq.disagreements ? eq.first_disagreement : sub.first_disagreement).dump();
      return false;
    }
    if (!eq.related_count || eq.related_count == eq.trials) {
      detail = "degenerate trial mix: related " + std::to_string(eq.related_count);
      return false;
    }
    return true;
  });

  criterion(9, "factored semantics reproduces direct evaluation on 100 random programs",
            [&](std::string& detail) {
              RngStream rng(2024, 900);
              int grid_checked = 0;
              for (int i = 0; i < 100; ++i) {
                TermPtr m = random_continuous_program(rng, 5);
                Factorized f = factorize(m);
                ModularDistribution d = modular_eval(f.pre, 1000);
                EmpiricalMeasure rec = modular_reconstruct(d, f.reals, 100000, 1, 900 + 2 * i);
                EmpiricalMeasure dir = estimate(m, 100000, 1000, 1, 901 + 2 * i);
                if (std::fabs(rec.mass() - dir.mass()) > 1e-12) {
                  detail = "program " + std::to_string(i) + " mass " +
                           std::to_string(rec.mass()) + " vs " + std::to_string(dir.mass()) +
                           ": " + print_term(m);
                  return false;
                }
                KsDecision ks = ks_two_sample(rec.reals(), dir.reals(), 0.01);
                if (!ks.accept) {
                  detail = "program " + std::to_string(i) + " ks " +
                           std::to_string(ks.statistic) + " > " + std::to_string(ks.threshold) +
                           ": " + print_term(m);
                  return false;
                }
                int draws = 0;
                for (const auto& e : d.entries)
                  draws = std::max(draws, kernel_draw_count(e.kernel));
                if (draws <= 2) {
                  double tv = tv_distance(modular_exact_grid(d, f.reals, 16, 2),
                                          exact_eval_grid(m, 1000, 16, 2));
                  if (tv > 1e-3) {
                    detail = "program " + std::to_string(i) + " grid tv " + std::to_string(tv) +
                             ": " + print_term(m);
                    return false;
                  }
                  ++grid_checked;
                }
              }
              if (grid_checked < 30) {
                detail = "only " + std::to_string(grid_checked) + " grid comparisons";
                return false;
              }
              return true;
            });

  criterion(10, "the weak-convergence audit tells smooth from jumpy parameters",
            [&](std::string& detail) {
              std::vector<std::vector<double>> toward, below;
              for (int n = 1; n <= 20; ++n) {
                toward.push_back({1.0 / n});
                below.push_back({-1.0 / n});
              }
              Factorized smooth = factorize(parse_term("id(1.0)"));
              FellerReport a = feller_audit(smooth.pre, {0.0}, toward, 10000, 1000, 1);
              if (a.verdict != "CONVERGENT" || a.tail_gap > a.noise_floor) {
                detail = "smooth: " + a.to_json().dump();
                return false;
              }
              Factorized jumpy = factorize(parse_term("step(1.0)"));
              FellerReport b = feller_audit(jumpy.pre, {0.0}, below, 10000, 1000, 1);
              if (b.verdict != "DIVERGENT" || b.tail_fn.find("sigmoid") == std::string::npos) {
                detail = "jumpy: " + b.to_json().dump();
                return false;
              }
              for (const auto& step : b.steps)
                if (step.max_gap < 0.9) {
                  detail = "jumpy gap " + std::to_string(step.max_gap) + " at point " +
                           std::to_string(step.point[0]);
                  return false;
                }
              return true;
            });

  criterion(11, "the shipped-program battery passes and reruns byte-identically",
            [&](std::string& detail) {
              CorpusOptions opt;
              Json first = corpus_check(opt);
              Json second = corpus_check(opt);
              if (first.dump(2) != second.dump(2)) {
                detail = "reports differ between runs";
                return false;
              }
              if (first["all_pass"] != true) {
                for (const auto& c : first["claims"])
                  if (c["pass"] != true) detail += c["name"].get<std::string>() + " failed; ";
                return false;
              }
              return true;
            });

  return g_failures;
}
