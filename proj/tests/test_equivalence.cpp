#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "lmplambda/equivalence.hpp"
#include "lmplambda/generators.hpp"

using namespace lmplambda;

namespace {

bool same_partition(const EquivRelation& a, const EquivRelation& b) {
  if (a.carrier != b.carrier) return false;
  size_t n = a.carrier.size();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (a.related((int)i, (int)j) != b.related((int)i, (int)j)) return false;
  return true;
}

bool refines(const EquivRelation& fine, const EquivRelation& coarse) {
  size_t n = fine.carrier.size();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      if (fine.related((int)i, (int)j) && !coarse.related((int)i, (int)j)) return false;
  return true;
}

FiniteLMP hand5() {
  Json j;
  j["states"] = {"s", "t", "u", "v", "w"};
  j["labels"] = {"a"};
  j["kernels"]["a"] = {{0.0, 0.0, 0.5, 0.5, 0.0},
                       {0.0, 0.0, 0.0, 0.0, 1.0},
                       {0.0, 0.0, 0.0, 0.0, 0.0},
                       {0.0, 0.0, 0.0, 0.0, 0.0},
                       {0.0, 0.0, 0.0, 0.0, 0.0}};
  return FiniteLMP::from_json(j);
}

FiniteLMP halfloop() {
  Json j;
  j["states"] = {"s", "d"};
  j["labels"] = {"a"};
  j["kernels"]["a"] = {{0.5, 0.0}, {0.0, 0.0}};
  return FiniteLMP::from_json(j);
}

// every partition of {0..n-1} via restricted growth strings
std::vector<std::vector<int>> all_partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> ids(n, 0);
  std::function<void(int, int)> go = [&](int i, int maxid) {
    if (i == n) {
      out.push_back(ids);
      return;
    }
    for (int b = 0; b <= maxid + 1; ++b) {
      ids[i] = b;
      go(i + 1, std::max(maxid, b));
    }
  };
  go(0, -1);
  return out;
}

} // namespace

TEST_CASE("test expressions print and parse both ways") {
  for (const char* text :
       {"w", "a.w", "eval.leq:1/2.w", "(w & eval.w)", "(a.w & (b.w & c.w))",
        "eval.pass:{lam x: real. x}.eval.leq:3/4.w", "case:some.w", "unbox.w"}) {
    TestPtr t = parse_test(text);
    CHECK(print_test(t) == text);
  }
  CHECK(test_size(parse_test("w")) == 0);
  CHECK(test_size(parse_test("a.w")) == 1);
  CHECK(test_size(parse_test("eval.leq:1/2.w")) == 2);
  CHECK(test_size(parse_test("(w & eval.w)")) == 2);
  CHECK_THROWS(parse_test(""));
  CHECK_THROWS(parse_test("(w & w"));
  CHECK_THROWS(parse_test("w)"));
}

TEST_CASE("formulas print in threshold-diamond form") {
  FormulaPtr f = f_diamond("a", Rational(1, 2), f_and(f_top(), f_diamond("b", Rational(0, 1), f_top())));
  CHECK(print_formula(f) == "<a>_1/2 (T & <b>_0 T)");
}

TEST_CASE("partition refinement finds the coarsest bisimulation") {
  FiniteLMP l = hand5();
  EquivRelation r = state_bisim_finite(l);
  EquivRelation expect =
      EquivRelation::from_blocks(l.states, {{"s", "t"}, {"u", "v", "w"}});
  CHECK(same_partition(r, expect));
  CHECK(is_bisimulation(l, r));
  CHECK(!is_bisimulation(l, EquivRelation::total(l.states)));
  CHECK(is_bisimulation(l, EquivRelation::identity(l.states)));
}

TEST_CASE("the computed bisimulation is the coarsest one") {
  FiniteLMP l = hand5();
  EquivRelation computed = state_bisim_finite(l);
  int count = 0;
  for (const auto& ids : all_partitions((int)l.states.size())) {
    EquivRelation r;
    r.carrier = l.states;
    r.block_id = ids;
    if (is_bisimulation(l, r)) {
      ++count;
      CHECK(refines(r, computed));
    }
  }
  CHECK(count >= 2);
}

TEST_CASE("formula satisfaction uses strict thresholds") {
  FiniteLMP l = halfloop();
  CHECK(!logic_sat_finite(l, "d", f_diamond("a", Rational(0, 1), f_top())));
  CHECK(logic_sat_finite(l, "s", f_diamond("a", Rational(1, 4), f_top())));
  CHECK(!logic_sat_finite(l, "s", f_diamond("a", Rational(1, 2), f_top())));
  CHECK(logic_sat_finite(l, "s", f_top()));
  CHECK(logic_sat_finite(
      l, "s", f_and(f_top(), f_diamond("a", Rational(1, 4), f_top()))));
}

TEST_CASE("depth-zero logic cannot separate anything") {
  EquivRelation r = logical_equiv_finite(hand5(), 0);
  CHECK(r.num_blocks() == 1);
}

TEST_CASE("logic, tests, and refinement agree on the worked model") {
  FiniteLMP l = hand5();
  EquivRelation bis = state_bisim_finite(l);
  CHECK(same_partition(bis, logical_equiv_finite(l, 2)));
  CHECK(same_partition(bis, logical_equiv_finite(l, 2, dyadic_rationals(3))));
  CHECK(same_partition(bis, test_equiv_finite(l, 2)));
}

TEST_CASE("logic, tests, and refinement agree on random models") {
  RngStream rng(31, 0);
  for (int i = 0; i < 100; ++i) {
    FiniteLMP l = random_finite_lmp(rng, 6, 3);
    int d = (int)l.states.size();
    EquivRelation bis = state_bisim_finite(l);
    EquivRelation logic = logical_equiv_finite(l, d);
    EquivRelation tests = test_equiv_finite(l, d);
    CHECK(same_partition(bis, logic));
    CHECK(same_partition(bis, tests));
  }
}

TEST_CASE("exact test success on finite models") {
  FiniteLMP l = hand5();
  CHECK(test_success_finite(l, "u", parse_test("w")) == 1.0);
  CHECK(test_success_finite(l, "s", parse_test("a.w")) == doctest::Approx(1.0));
  CHECK(test_success_finite(l, "u", parse_test("a.w")) == 0.0);
  CHECK(test_success_finite(l, "s", parse_test("a.a.w")) == 0.0);
  CHECK(test_success_finite(l, "t", parse_test("a.a.w")) == 0.0);

  FiniteLMP h = halfloop();
  CHECK(test_success_finite(h, "s", parse_test("a.w")) == doctest::Approx(0.5));
  CHECK(test_success_finite(h, "s", parse_test("(a.w & a.w)")) == doctest::Approx(0.25));
  CHECK(test_success_finite(h, "s", parse_test("a.a.w")) == doctest::Approx(0.25));
}

TEST_CASE("the always-pass test succeeds exactly") {
  AppState v = AppState::of_value(v_real(0.5), t_real());
  McEstimate e = test_success_mc(v, parse_test("w"), 100, 10, 1);
  CHECK(e.mean == 1.0);
  CHECK(e.half == 0.0);
  CHECK(test_success_grid(v, parse_test("w"), 10, 4) == 1.0);
}

TEST_CASE("threshold tests measure the uniform draw") {
  AppState s = AppState::of_term(parse_term("sample"), t_real());
  TestPtr t = parse_test("eval.leq:1/2.w");
  CHECK(test_success_grid(s, t, 100, 10) == doctest::Approx(0.5));
  McEstimate e = test_success_mc(s, t, 20000, 100, 1);
  CHECK(std::fabs(e.mean - 0.5) <= e.half + 0.02);
  CHECK(e.half > 0.0);
}

TEST_CASE("conjunction placement controls sharing") {
  AppState s = AppState::of_term(parse_term("sample"), t_real());
  TestPtr indep = parse_test("(eval.leq:1/2.w & eval.leq:1/2.w)");
  TestPtr shared = parse_test("eval.(leq:1/2.w & leq:1/2.w)");
  CHECK(test_success_grid(s, indep, 100, 10) == doctest::Approx(0.25));
  CHECK(test_success_grid(s, shared, 100, 10) == doctest::Approx(0.5));

  McEstimate ei = test_success_mc(s, indep, 20000, 100, 2);
  McEstimate es = test_success_mc(s, shared, 20000, 100, 2);
  CHECK(std::fabs(ei.mean - 0.25) <= ei.half + 0.02);
  CHECK(std::fabs(es.mean - 0.5) <= es.half + 0.02);
}

TEST_CASE("test enumeration is budgeted, canonical, and relevant") {
  std::vector<TestPtr> ts = enumerate_tests(false, t_real(), 1, default_rational_grid(), 60);
  REQUIRE(!ts.empty());
  CHECK(ts.size() <= 60);
  CHECK(print_test(ts[0]) == "w");
  std::set<std::string> prints;
  int prev_size = 0;
  for (const auto& t : ts) {
    CHECK(prints.insert(print_test(t)).second);
    CHECK(test_size(t) >= prev_size);
    prev_size = test_size(t);
  }
  CHECK(prints.count("eval.w"));
  CHECK(prints.count("eval.leq:1/2.w"));

  std::vector<TestPtr> few = enumerate_tests(false, t_real(), 1, default_rational_grid(), 3);
  CHECK(few.size() == 3);
}

TEST_CASE("statistical testing separates shifted samplers") {
  CompareOptions opt;
  opt.test_samples = 4000;
  opt.test_budget = 40;
  opt.fuel = 1000;
  AppState a = AppState::of_term(parse_term("sample"), t_real());
  AppState b = AppState::of_term(parse_term("let x = sample in add(x, 1.0)"), t_real());
  EquivalenceReport rep = distinguish_by_tests(a, b, opt);
  CHECK(rep.verdict == "DISTINGUISHED");
  CHECK(rep.witness["kind"] == "test");
  CHECK(rep.witness["test"] == "eval.leq:1.w");
  CHECK(rep.max_gap > 3.0);

  Json j = rep.to_json();
  for (const char* key : {"verdict", "witness", "budget", "seeds", "max_gap"})
    CHECK_MESSAGE(j.contains(key), key);
}

TEST_CASE("identical samplers stay unseparated within budget") {
  CompareOptions opt;
  opt.test_samples = 2000;
  opt.test_budget = 30;
  opt.fuel = 1000;
  AppState a = AppState::of_term(parse_term("sample"), t_real());
  AppState b = AppState::of_term(parse_term("sample"), t_real());
  EquivalenceReport rep = distinguish_by_tests(a, b, opt);
  CHECK(rep.verdict == "NOT_SEPARATED_WITHIN_BUDGET");
  CHECK(rep.budget["tests"].get<size_t>() <= 30);
}

TEST_CASE("syntactically equal programs compare as exactly equal") {
  CompareOptions opt;
  EquivalenceReport rep =
      compare_programs(parse_term("let x = sample in mul(x, 2.0)"), parse_term("let x = sample in mul(x, 2.0)"), opt);
  CHECK(rep.verdict == "EQUAL_EXACT");
}

TEST_CASE("self-application contexts expose the key-revealing pair") {
  CompareOptions opt;
  opt.use_tests = false;
  opt.samples = 20000;
  opt.fuel = 1000;
  EquivalenceReport rep =
      compare_programs(corpus::ce_soundness_M(), corpus::ce_soundness_N(), opt);
  CHECK(rep.verdict == "DISTINGUISHED");
  CHECK(rep.witness["kind"] == "context");
  std::string name = rep.witness["name"].get<std::string>();
  CHECK(name.rfind("selfapp", 0) == 0);
}

TEST_CASE("the secret-state pair survives a quick comparison") {
  CompareOptions opt;
  opt.samples = 20000;
  opt.test_samples = 2000;
  opt.test_budget = 30;
  opt.fuel = 1000;
  EquivalenceReport rep = compare_programs(corpus::ce_state_M(), corpus::ce_state_N(), opt);
  CHECK(rep.verdict == "NOT_SEPARATED_WITHIN_BUDGET");
}

TEST_CASE("shipped program battery passes at reduced budgets") {
  CorpusOptions opt;
  opt.samples = 30000;
  opt.test_samples = 1000;
  opt.test_budget = 50;
  Json j = corpus_check(opt);
  CHECK(j["all_pass"] == true);
  REQUIRE(j["claims"].is_array());
  CHECK(j["claims"].size() >= 6);
  for (const auto& c : j["claims"]) {
    CHECK(c.contains("name"));
    CHECK(c.contains("pass"));
  }
}

TEST_CASE("dyadic threshold grids") {
  std::vector<Rational> g0 = dyadic_rationals(0);
  REQUIRE(g0.size() == 2);
  CHECK(g0[0] == Rational(0, 1));
  CHECK(g0[1] == Rational(1, 1));

  std::vector<Rational> g2 = dyadic_rationals(2);
  REQUIRE(g2.size() == 5);
  CHECK(g2[1] == Rational(1, 4));
  CHECK(g2[3] == Rational(3, 4));

  CHECK(dyadic_rationals(6).size() == 65);
  std::vector<Rational> g = dyadic_rationals(4);
  for (size_t i = 1; i < g.size(); ++i) CHECK(g[i - 1] < g[i]);
}
