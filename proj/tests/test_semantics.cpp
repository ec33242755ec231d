#include <cmath>

#include "doctest.h"
#include "lmplambda/generators.hpp"
#include "lmplambda/measures.hpp"
#include "lmplambda/semantics.hpp"

using namespace lmplambda;

namespace {

double uniform_cdf(double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); }

const char* kGeometric =
    "(fix f: (real -> real). lam n: real. bernoulli(n, f add(n, 1.0), 0.5)) 0.0";

} // namespace

TEST_CASE("values converge in one step; fuel zero never converges") {
  RngStream rng(1, 0);
  TermPtr v = parse_term("3.0");
  CHECK(eval_sample(v, 1, rng).converged);
  CHECK(!eval_sample(v, 0, rng).converged);
  CHECK(!eval_sample(parse_term("sample"), 0, rng).converged);
}

TEST_CASE("the diverging fixpoint exhausts any fuel") {
  RngStream rng(1, 1);
  EvalOutcome out = eval_sample(sugar::omega(), 3000, rng);
  CHECK(!out.converged);
}

TEST_CASE("deterministic programs put all mass on one value") {
  EmpiricalMeasure e = estimate(parse_term("(lam x: real. x) 3.0"), 500, 100, 7);
  CHECK(e.mass() == 1.0);
  CHECK(e.atom_weight(v_real(3.0)) == 1.0);
}

TEST_CASE("estimation is reproducible and worker-independent") {
  TermPtr m = parse_term("let a = sample in let b = sample in add(a, b)");
  EmpiricalMeasure a = estimate(m, 4000, 100, 5, 3, 1);
  EmpiricalMeasure b = estimate(m, 4000, 100, 5, 3, 4);
  REQUIRE(a.converged.size() == b.converged.size());
  CHECK(a.reals() == b.reals());

  EmpiricalMeasure c = estimate(m, 4000, 100, 5, 4);
  CHECK(a.reals() != c.reals());
}

TEST_CASE("convergence mass is monotone in fuel") {
  TermPtr m = parse_term(kGeometric);
  double prev = -1.0;
  for (long fuel : {5L, 10L, 20L, 40L, 80L, 200L}) {
    double mass = estimate(m, 3000, fuel, 11).mass();
    CHECK(mass >= prev);
    prev = mass;
  }
  CHECK(prev > 0.99);
}

TEST_CASE("grid oracle basics") {
  DiscreteMeasure u = exact_eval_grid(parse_term("sample"), 100, 10, 1);
  REQUIRE(u.atoms.size() == 10);
  for (const auto& a : u.atoms) CHECK(a.weight == doctest::Approx(0.1));
  CHECK(u.mass() == doctest::Approx(1.0));

  DiscreteMeasure b = exact_eval_grid(parse_term("bernoulli(0.0, 1.0, 0.5)"), 100, 1000, 1);
  CHECK(b.atom_weight(v_real(0.0)) == doctest::Approx(0.5));
  CHECK(b.atom_weight(v_real(1.0)) == doctest::Approx(0.5));

  DiscreteMeasure d = exact_eval_grid(parse_term("(lam x: real. x) 3.0"), 100, 7);
  REQUIRE(d.atoms.size() == 1);
  CHECK(d.atoms[0].weight == 1.0);
}

TEST_CASE("grid mass is monotone in fuel") {
  TermPtr m = parse_term("let a = sample in add(a, 1.0)");
  double prev = -1.0;
  for (long fuel = 0; fuel <= 8; ++fuel) {
    double mass = exact_eval_grid(m, fuel, 4, 1).mass();
    CHECK(mass >= prev);
    prev = mass;
  }
  CHECK(prev == 1.0);
}

TEST_CASE("grid rejects programs exceeding the draw bound") {
  TermPtr m = parse_term(
      "let a = sample in let b = sample in let c = sample in let d = sample in "
      "let e = sample in add(a, e)");
  CHECK_THROWS(exact_eval_grid(m, 1000, 2, 4));
}

TEST_CASE("uniform sampling matches the uniform law") {
  EmpiricalMeasure e = estimate(parse_term("sample"), 20000, 100, 1, 10);
  CHECK(e.mass() == 1.0);
  KsDecision ks = ks_one_sample(e.reals(), uniform_cdf, 0.01);
  CHECK(ks.accept);
}

TEST_CASE("box-muller sampling matches the normal law") {
  EmpiricalMeasure e = estimate(sugar::normal_std(), 20000, 100, 1, 11);
  CHECK(e.mass() == 1.0);
  KsDecision ks = ks_one_sample(e.reals(), std_normal_cdf, 0.01);
  CHECK(ks.accept);
}

TEST_CASE("sample-free programs evaluate exactly regardless of seed") {
  TermPtr m = parse_term("let x = mul(2.0, 3.0) in let y = neg(1.0) in add(x, y)");
  EmpiricalMeasure a = estimate(m, 50, 100, 1);
  EmpiricalMeasure b = estimate(m, 50, 100, 999);
  CHECK(a.atom_weight(v_real(5.0)) == 1.0);
  CHECK(b.atom_weight(v_real(5.0)) == 1.0);
}

TEST_CASE("kernel composition samples f then g") {
  KernelPtr two_draws = k_product(k_lebesgue(), k_lebesgue());
  KernelPtr add2 = k_prim("add");
  KernelPtr k = k_compose(add2, two_draws);
  CHECK(kernel_in_dim(k) == 0);
  CHECK(kernel_out_dim(k) == 1);
  CHECK(kernel_draw_count(k) == 2);

  RngStream r1(9, 0), r2(9, 0);
  std::vector<double> got = kernel_sample(k, {}, r1);
  double u = r2.uniform(), v = r2.uniform();
  REQUIRE(got.size() == 1);
  CHECK(got[0] == u + v);
}

TEST_CASE("reindex selects input slots and collapses identity maps") {
  KernelPtr swap = k_reindex({1, 0}, 2);
  std::vector<double> draws;
  size_t pos = 0;
  CHECK(kernel_apply_draws(swap, {3.0, 4.0}, draws, pos) == std::vector<double>{4.0, 3.0});
  CHECK(kernel_signature(k_reindex({0, 1}, 2)) == kernel_signature(k_identity(2)));
  CHECK_THROWS(k_reindex({2}, 2));
  CHECK_THROWS(k_compose(k_prim("add"), k_identity(3)));
}

TEST_CASE("positional draws run out loudly") {
  std::vector<double> draws = {0.5};
  size_t pos = 0;
  KernelPtr k = k_product(k_lebesgue(), k_lebesgue());
  CHECK_THROWS(kernel_apply_draws(k, {}, draws, pos));
}

TEST_CASE("value embedding is the identity on reals and stable per skeleton") {
  CHECK(embed_value(v_real(2.5)) == 2.5);
  CHECK(embed_value(v_real(-1.0)) == -1.0);

  double t = embed_value(sugar::true_value());
  double f = embed_value(sugar::false_value());
  CHECK(t != f);

  double a = embed_value(v_fold(v_real(0.1), t_mu("a", t_real())));
  double b = embed_value(v_fold(v_real(0.1 + 1e-9), t_mu("a", t_real())));
  CHECK(std::fabs(a - b) < 1e-8);
  double c = embed_value(v_fold(v_real(0.9), t_mu("a", t_real())));
  CHECK(std::fabs(a - c) > 1e-3);
}

TEST_CASE("audit reports a constant sequence at the target as convergent") {
  Factorized f = factorize(parse_term("id(1.0)"));
  FellerReport rep = feller_audit(f.pre, {0.25}, {{0.25}, {0.25}, {0.25}}, 2000, 100, 1);
  CHECK(rep.verdict == "CONVERGENT");
  CHECK(rep.at_target);
}

TEST_CASE("audit ignores holes the distribution does not depend on") {
  Factorized f = factorize(parse_term("let u = id(1.0) in 2.0"));
  REQUIRE(f.pre.hole_count == 2);
  std::vector<std::vector<double>> seq;
  for (int n = 1; n <= 8; ++n) seq.push_back({1.0 / n, 2.0});
  FellerReport rep = feller_audit(f.pre, {0.0, 2.0}, seq, 2000, 100, 1);
  CHECK(rep.verdict == "CONVERGENT");
  CHECK(rep.tail_gap == 0.0);
}

TEST_CASE("audit flags the discontinuous threshold primitive") {
  Factorized f = factorize(parse_term("step(1.0)"));
  std::vector<std::vector<double>> seq;
  for (int n = 1; n <= 10; ++n) seq.push_back({-1.0 / n});
  FellerReport rep = feller_audit(f.pre, {0.0}, seq, 2000, 100, 1);
  CHECK(rep.verdict == "DIVERGENT");
  CHECK(rep.tail_gap >= 0.9);
  CHECK(rep.tail_fn.find("sigmoid") != std::string::npos);
}

TEST_CASE("audit refuses sequences that stop approaching the target") {
  Factorized f = factorize(parse_term("id(1.0)"));
  FellerReport rep = feller_audit(f.pre, {0.0}, {{0.5}, {0.9}, {0.1}}, 1000, 100, 1);
  CHECK(rep.verdict == "INCONCLUSIVE");
  CHECK(!rep.note.empty());
}

TEST_CASE("audit validates its battery") {
  Factorized f = factorize(parse_term("id(1.0)"));
  CHECK_THROWS(feller_audit(f.pre, {0.0}, {{0.5}}, 100, 100, 1, 0.2, {}));
}

TEST_CASE("estimate reports follow the schema") {
  Json j = measure_report(estimate(parse_term("sample"), 200, 100, 3));
  for (const char* key : {"type", "mass", "atoms", "real_samples", "quantiles", "seed",
                          "samples", "fuel"})
    CHECK_MESSAGE(j.contains(key), key);
  CHECK(j["type"] == "real");
}

TEST_CASE("total variation on discrete results") {
  DiscreteMeasure a = exact_eval_grid(parse_term("bernoulli(0.0, 1.0, 0.5)"), 100, 1000, 1);
  DiscreteMeasure b = exact_eval_grid(parse_term("bernoulli(0.0, 1.0, 0.75)"), 100, 1000, 1);
  CHECK(tv_distance(a, a) == 0.0);
  CHECK(tv_distance(a, b) == doctest::Approx(0.25));
}
