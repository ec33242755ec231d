#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "lmplambda/equivalence.hpp"
#include "lmplambda/generators.hpp"
#include "lmplambda/lmp.hpp"
#include "lmplambda/measures.hpp"
#include "lmplambda/semantics.hpp"
#include "lmplambda/syntax.hpp"

using namespace lmplambda;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LanguageMode parse_mode(const std::string& s) {
  if (s == "full") return LanguageMode::Full;
  if (s == "continuous") return LanguageMode::Continuous;
  throw std::runtime_error("unknown mode: " + s + " (expected full|continuous)");
}

std::vector<double> parse_point(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::strtod(tok.c_str(), nullptr));
  }
  return out;
}

std::vector<Rational> parse_rationals(const std::string& s) {
  std::vector<Rational> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(Rational::parse(tok));
  }
  return out;
}

void emit(const Json& j, const std::string& out_path) {
  std::string text = j.dump(2);
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    f << text << "\n";
  }
  std::cout << text << "\n";
}

uint64_t default_seed() {
  if (const char* s = std::getenv("LMPLAMBDA_SEED")) return std::strtoull(s, nullptr, 10);
  return 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"workbench for a stochastic lambda calculus and its process views"};
  app.require_subcommand(1);
  app.fallthrough();

  uint64_t seed = default_seed();
  app.add_option("--seed", seed, "base RNG seed (env LMPLAMBDA_SEED overrides the default)")
      ->capture_default_str();

  int rc = 0;

  // run
  auto* c_run = app.add_subcommand("run", "evaluate a program once");
  std::string run_file, run_mode = "full";
  long run_fuel = 10000;
  uint64_t run_stream = 0;
  c_run->add_option("file", run_file)->required();
  c_run->add_option("--fuel", run_fuel)->capture_default_str();
  c_run->add_option("--stream", run_stream)->capture_default_str();
  c_run->add_option("--mode", run_mode)->capture_default_str();
  c_run->callback([&] {
    TermPtr m = parse_term(slurp(run_file));
    typecheck({}, m, parse_mode(run_mode));
    RngStream rng(seed, run_stream);
    EvalOutcome out = eval_sample(m, run_fuel, rng);
    if (out.converged)
      std::cout << print_value(out.value) << "\n";
    else
      std::cout << "diverged (fuel exhausted)\n";
  });

  // estimate
  auto* c_est = app.add_subcommand("estimate", "empirical output distribution");
  std::string est_file, est_mode = "full", est_out;
  size_t est_samples = 100000;
  long est_fuel = 10000;
  uint64_t est_stream = 0;
  c_est->add_option("file", est_file)->required();
  c_est->add_option("--samples", est_samples)->capture_default_str();
  c_est->add_option("--fuel", est_fuel)->capture_default_str();
  c_est->add_option("--stream", est_stream)->capture_default_str();
  c_est->add_option("--mode", est_mode)->capture_default_str();
  c_est->add_option("--out", est_out, "also write the JSON report here");
  c_est->callback([&] {
    TermPtr m = parse_term(slurp(est_file));
    typecheck({}, m, parse_mode(est_mode));
    EmpiricalMeasure e = estimate(m, est_samples, est_fuel, seed, est_stream);
    emit(measure_report(e), est_out);
  });

  // modular
  auto* c_mod = app.add_subcommand("modular", "literal-generic decomposition of a program");
  std::string mod_file, mod_out;
  long mod_fuel = 10000;
  c_mod->add_option("file", mod_file)->required();
  c_mod->add_option("--fuel", mod_fuel)->capture_default_str();
  c_mod->add_option("--out", mod_out);
  c_mod->callback([&] {
    TermPtr m = parse_term(slurp(mod_file));
    typecheck({}, m, LanguageMode::Continuous);
    Factorized f = factorize(m);
    ModularDistribution d = modular_eval(f.pre, mod_fuel);
    Json j = modular_report(d);
    j["literals"] = f.reals;
    emit(j, mod_out);
  });

  // feller
  auto* c_fel = app.add_subcommand("feller", "weak-convergence audit along literal sequences");
  std::string fel_file, fel_target, fel_out;
  std::vector<std::string> fel_steps;
  size_t fel_samples = 10000;
  long fel_fuel = 10000;
  double fel_threshold = 0.2;
  c_fel->add_option("file", fel_file)->required();
  c_fel->add_option("--target", fel_target, "comma-separated literal vector")->required();
  c_fel->add_option("--step", fel_steps, "comma-separated literal vector, repeatable")
      ->required();
  c_fel->add_option("--samples", fel_samples)->capture_default_str();
  c_fel->add_option("--fuel", fel_fuel)->capture_default_str();
  c_fel->add_option("--threshold", fel_threshold)->capture_default_str();
  c_fel->add_option("--out", fel_out);
  c_fel->callback([&] {
    TermPtr m = parse_term(slurp(fel_file));
    typecheck({}, m);
    Factorized f = factorize(m);
    std::vector<std::vector<double>> seq;
    for (const auto& s : fel_steps) seq.push_back(parse_point(s));
    FellerReport rep = feller_audit(f.pre, parse_point(fel_target), seq, fel_samples, fel_fuel,
                                    seed, fel_threshold);
    emit(rep.to_json(), fel_out);
  });

  // test
  auto* c_test = app.add_subcommand("test", "success weight of a test on a program state");
  std::string test_file, test_src, test_mode = "full";
  size_t test_samples = 10000;
  long test_fuel = 10000;
  uint64_t test_stream = 0;
  int test_grid = 0;
  c_test->add_option("file", test_file)->required();
  c_test->add_option("--test", test_src, "e.g. eval.leq:1/2.w")->required();
  c_test->add_option("--samples", test_samples)->capture_default_str();
  c_test->add_option("--fuel", test_fuel)->capture_default_str();
  c_test->add_option("--stream", test_stream)->capture_default_str();
  c_test->add_option("--mode", test_mode)->capture_default_str();
  c_test->add_option("--grid-points", test_grid,
                     "use deterministic midpoint quadrature instead of sampling");
  c_test->callback([&] {
    LanguageMode mode = parse_mode(test_mode);
    TermPtr m = parse_term(slurp(test_file));
    TypePtr ty = typecheck({}, m, mode);
    AppState s = AppState::of_term(m, ty);
    TestPtr t = parse_test(test_src);
    Json j{{"test", print_test(t)}, {"state", s.print()}};
    if (test_grid > 0) {
      j["value"] = test_success_grid(s, t, test_fuel, test_grid, 4, mode);
      j["grid_points"] = test_grid;
    } else {
      McEstimate e = test_success_mc(s, t, test_samples, test_fuel, seed, test_stream, mode);
      j["mean"] = e.mean;
      j["ci_half"] = e.half;
      j["samples"] = e.samples;
    }
    emit(j, "");
  });

  // bisim
  auto* c_bis = app.add_subcommand("bisim", "state partitions of a finite labelled process");
  std::string bis_file;
  bool bis_check = false;
  int bis_depth = 1;
  c_bis->add_option("file", bis_file)->required();
  c_bis->add_flag("--check", bis_check,
                  "also compute the logical and testing partitions and require coincidence");
  c_bis->add_option("--depth", bis_depth, "value depth for the logical threshold family")
      ->capture_default_str();
  c_bis->callback([&] {
    FiniteLMP l = FiniteLMP::load(bis_file);
    EquivRelation r = state_bisim_finite(l);
    std::cout << "bisimulation blocks:\n";
    for (const auto& block : r.blocks()) {
      std::cout << "  {";
      for (size_t i = 0; i < block.size(); ++i)
        std::cout << (i ? " " : "") << l.states[block[i]];
      std::cout << "}\n";
    }
    if (bis_check) {
      EquivRelation lg = logical_equiv_finite(l, bis_depth);
      EquivRelation ts = test_equiv_finite(l, bis_depth);
      bool ok = true;
      for (size_t i = 0; i < l.states.size() && ok; ++i)
        for (size_t j = 0; j < l.states.size() && ok; ++j)
          ok = r.related(i, j) == lg.related(i, j) && r.related(i, j) == ts.related(i, j);
      std::cout << (ok ? "logical and testing partitions coincide\n"
                       : "partition mismatch\n");
      if (!ok) rc = 1;
    }
  });

  // compare
  auto* c_cmp = app.add_subcommand("compare", "search for an observable separation");
  std::string cmp_a, cmp_b, cmp_mode = "full", cmp_rats, cmp_out;
  CompareOptions copt;
  c_cmp->add_option("file_a", cmp_a)->required();
  c_cmp->add_option("file_b", cmp_b)->required();
  c_cmp->add_option("--samples", copt.samples)->capture_default_str();
  c_cmp->add_option("--test-samples", copt.test_samples)->capture_default_str();
  c_cmp->add_option("--fuel", copt.fuel)->capture_default_str();
  c_cmp->add_option("--depth", copt.depth)->capture_default_str();
  c_cmp->add_option("--budget", copt.test_budget)->capture_default_str();
  c_cmp->add_option("--rationals", cmp_rats, "threshold grid, e.g. 0,1/4,1/2,3/4,1");
  c_cmp->add_option("--alpha", copt.alpha)->capture_default_str();
  c_cmp->add_option("--mode", cmp_mode)->capture_default_str();
  c_cmp->add_flag("--no-tests", [&copt](int64_t) { copt.use_tests = false; });
  c_cmp->add_flag("--no-contexts", [&copt](int64_t) { copt.use_contexts = false; });
  c_cmp->add_option("--out", cmp_out);
  c_cmp->callback([&] {
    copt.seed = seed;
    copt.mode = parse_mode(cmp_mode);
    if (!cmp_rats.empty()) copt.grid = parse_rationals(cmp_rats);
    EquivalenceReport rep =
        compare_programs(parse_term(slurp(cmp_a)), parse_term(slurp(cmp_b)), copt);
    emit(rep.to_json(), cmp_out);
  });

  // corpus
  auto* c_cor = app.add_subcommand("corpus", "claim battery over the shipped examples");
  std::string cor_out;
  CorpusOptions oopt;
  c_cor->add_option("--samples", oopt.samples)->capture_default_str();
  c_cor->add_option("--test-samples", oopt.test_samples)->capture_default_str();
  c_cor->add_option("--fuel", oopt.fuel)->capture_default_str();
  c_cor->add_option("--budget", oopt.test_budget)->capture_default_str();
  c_cor->add_option("--out", cor_out);
  c_cor->callback([&] {
    oopt.seed = seed;
    Json j = corpus_check(oopt);
    emit(j, cor_out);
    if (!j["all_pass"].get<bool>()) rc = 1;
  });

  // relate
  auto* c_rel = app.add_subcommand(
      "relate", "randomized agreement check of the two liftings of a state relation");
  size_t rel_trials = 200;
  int rel_points = 6;
  c_rel->add_option("--trials", rel_trials)->capture_default_str();
  c_rel->add_option("--max-points", rel_points)->capture_default_str();
  c_rel->callback([&] {
    GammaThetaReport a = check_gamma_eq_theta(rel_points, rel_trials, seed);
    GammaThetaReport b = check_theta_subset_gamma(rel_points, rel_trials, seed + 1);
    Json j{{"equality", a.to_json()}, {"witness_soundness", b.to_json()}};
    emit(j, "");
    if (a.disagreements != 0 || b.disagreements != 0) rc = 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
