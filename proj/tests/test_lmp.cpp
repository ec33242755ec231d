#include <set>
#include <string>
#include <variant>
#include <vector>

#include "doctest.h"
#include "lmplambda/lmp.hpp"

using namespace lmplambda;

namespace {

ValuePtr val(const std::string& src) {
  TermPtr m = parse_term(src);
  return std::get<TVal>(m->node).v;
}

Json tiny_lmp_json() {
  Json j;
  j["states"] = {"s"};
  j["labels"] = {"a"};
  j["kernels"]["a"] = {{1.0}};
  return j;
}

} // namespace

TEST_CASE("finite model loading and validation") {
  FiniteLMP l = FiniteLMP::from_json(tiny_lmp_json());
  CHECK(l.state_index("s") == 0);
  CHECK(l.kernel("a")[0][0] == 1.0);
  CHECK(FiniteLMP::from_json(l.to_json()).to_json() == l.to_json());
  CHECK_THROWS(l.state_index("missing"));
  CHECK_THROWS(l.kernel("missing"));

  Json heavy = tiny_lmp_json();
  heavy["kernels"]["a"] = {{1.2}};
  CHECK_THROWS(FiniteLMP::from_json(heavy));

  Json negative = tiny_lmp_json();
  negative["kernels"]["a"] = {{-0.5}};
  CHECK_THROWS(FiniteLMP::from_json(negative));

  Json ragged = tiny_lmp_json();
  ragged["kernels"]["a"] = {{0.5, 0.5}};
  CHECK_THROWS(FiniteLMP::from_json(ragged));

  Json unlabeled = tiny_lmp_json();
  unlabeled["kernels"]["b"] = {{1.0}};
  CHECK_THROWS(FiniteLMP::from_json(unlabeled));

  Json dup = tiny_lmp_json();
  dup["states"] = {"s", "s"};
  dup["kernels"]["a"] = {{0.5, 0.0}, {0.0, 0.5}};
  CHECK_THROWS(FiniteLMP::from_json(dup));
}

TEST_CASE("rationals reduce, order, and round trip") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(1, -2) == Rational(-1, 2));
  CHECK(Rational(0, 5).print() == "0");
  CHECK(Rational(-3, 6).print() == "-1/2");
  CHECK(Rational::parse("3") == Rational(3, 1));
  CHECK(Rational::parse("-1/2") == Rational(-1, 2));
  CHECK(Rational::parse(Rational(7, 8).print()) == Rational(7, 8));
  CHECK(Rational(-1, 2) < Rational(1, 4));
  CHECK(Rational(1, 4) < Rational(1, 2));
  CHECK(Rational(1, 2).value() == 0.5);
  CHECK_THROWS(Rational(1, 0));
  CHECK_THROWS(Rational::parse("1/0"));
  CHECK_THROWS(Rational::parse("x"));
}

TEST_CASE("threshold probes weight real values") {
  AppState three = AppState::of_value(v_real(3.0), t_real());
  AppStep hit = app_step(three, act_leq(Rational(5, 1)));
  auto* w = std::get_if<StepWeighted>(&hit.node);
  REQUIRE(w);
  CHECK(w->weight == 1.0);
  CHECK(w->to.print() == three.print());

  AppStep low = app_step(three, act_leq(Rational(1, 1)));
  auto* miss = std::get_if<StepWeighted>(&low.node);
  REQUIRE(miss);
  CHECK(miss->weight == 0.0);

  AppState mid = AppState::of_value(v_real(3.5), t_real());
  AppStep half = app_step(mid, act_leq(Rational(3, 1)), LanguageMode::Continuous);
  auto* ramp = std::get_if<StepWeighted>(&half.node);
  REQUIRE(ramp);
  CHECK(ramp->weight == doctest::Approx(0.5));
  AppStep edge = app_step(three, act_leq(Rational(3, 1)), LanguageMode::Continuous);
  auto* eq = std::get_if<StepWeighted>(&edge.node);
  REQUIRE(eq);
  CHECK(eq->weight == 1.0);

  AppState lam = AppState::of_value(val("lam x: real. x"), t_arrow(t_real(), t_real()));
  CHECK(std::holds_alternative<StepNull>(app_step(lam, act_leq(Rational(0, 1))).node));
}

TEST_CASE("argument passing builds an application term state") {
  TypePtr rr = t_arrow(t_real(), t_real());
  AppState lam = AppState::of_value(val("lam x: real. x"), rr);
  AppStep st = app_step(lam, act_pass(v_real(2.0), t_real()));
  auto* d = std::get_if<StepDirac>(&st.node);
  REQUIRE(d);
  CHECK(!d->to.is_value);
  CHECK(type_equal(d->to.type, t_real()));
  CHECK(print_term(d->to.term) == "(lam x: real. x) 2");

  CHECK(std::holds_alternative<StepNull>(
      app_step(lam, act_pass(val("lam y: real. y"), rr)).node));
  AppState three = AppState::of_value(v_real(3.0), t_real());
  CHECK(std::holds_alternative<StepNull>(app_step(three, act_pass(v_real(1.0), t_real())).node));
}

TEST_CASE("evaluation loops on values and defers on terms") {
  AppState v = AppState::of_value(v_real(1.0), t_real());
  AppStep loop = app_step(v, act_eval());
  auto* self = std::get_if<StepDirac>(&loop.node);
  REQUIRE(self);
  CHECK(self->to.print() == v.print());

  AppState m = AppState::of_term(parse_term("add(1.0, 2.0)"), t_real());
  AppStep deferred = app_step(m, act_eval());
  auto* ev = std::get_if<StepEval>(&deferred.node);
  REQUIRE(ev);
  CHECK(type_equal(ev->type, t_real()));

  CHECK(std::holds_alternative<StepNull>(app_step(m, act_leq(Rational(1, 2))).node));
  CHECK(std::holds_alternative<StepNull>(app_step(m, act_pass(v_real(0.0), t_real())).node));
}

TEST_CASE("type loops gate on exact type equality") {
  AppState v = AppState::of_value(v_real(1.0), t_real());
  CHECK(std::holds_alternative<StepDirac>(app_step(v, act_type_loop(t_real())).node));
  CHECK(std::holds_alternative<StepNull>(
      app_step(v, act_type_loop(t_arrow(t_real(), t_real()))).node));
}

TEST_CASE("case probes project tagged payloads") {
  TypePtr opt = parse_type("sum {none: real, some: real}");
  ValuePtr some = val("(inj some 1.0 : sum {none: real, some: real})");
  AppState s = AppState::of_value(some, opt);
  AppStep st = app_step(s, act_case("some"));
  auto* d = std::get_if<StepDirac>(&st.node);
  REQUIRE(d);
  CHECK(d->to.is_value);
  CHECK(print_value(d->to.value) == "1");
  CHECK(type_equal(d->to.type, t_real()));

  CHECK(std::holds_alternative<StepNull>(app_step(s, act_case("none")).node));
  AppState r = AppState::of_value(v_real(1.0), t_real());
  CHECK(std::holds_alternative<StepNull>(app_step(r, act_case("some")).node));
}

TEST_CASE("unboxing unfolds recursive values") {
  TypePtr mu = parse_type("mu a. real");
  ValuePtr folded = val("(fold 2.0 : mu a. real)");
  AppState s = AppState::of_value(folded, mu);
  AppStep st = app_step(s, act_unbox());
  auto* d = std::get_if<StepDirac>(&st.node);
  REQUIRE(d);
  CHECK(print_value(d->to.value) == "2");
  CHECK(type_equal(d->to.type, t_real()));

  AppState r = AppState::of_value(v_real(1.0), t_real());
  CHECK(std::holds_alternative<StepNull>(app_step(r, act_unbox()).node));
}

TEST_CASE("rational value enumeration is canonical") {
  std::vector<Rational> grid = {Rational(0, 1), Rational(1, 1)};
  std::vector<ValuePtr> reals = enumerate_rational_values(t_real(), 0, grid);
  REQUIRE(reals.size() == 2);
  CHECK(print_value(reals[0]) == "0");
  CHECK(print_value(reals[1]) == "1");

  std::vector<ValuePtr> fns = enumerate_rational_values(t_arrow(t_real(), t_real()), 1, grid);
  REQUIRE(fns.size() == 3);
  std::set<std::string> prints;
  for (const auto& v : fns) prints.insert(print_value(v));
  CHECK(prints.count("lam x: real. 0"));
  CHECK(prints.count("lam x: real. 1"));
  CHECK(prints.count("lam x: real. x"));

  CHECK(enumerate_rational_values(t_arrow(t_real(), t_real()), 0, grid).empty());
  CHECK(enumerate_rational_values(t_real(), 3, grid, 1).size() == 1);
}

TEST_CASE("label families grow monotonically with depth") {
  std::vector<Rational> grid = {Rational(0, 1), Rational(1, 1)};

  std::vector<AppAction> bare = rational_label_family(t_real(), 0, {});
  REQUIRE(bare.size() == 2);
  CHECK(print_action(bare[0]) == "type:real");
  CHECK(print_action(bare[1]) == "eval");

  std::vector<AppAction> reals = rational_label_family(t_real(), 0, grid);
  REQUIRE(reals.size() == 4);
  CHECK(print_action(reals[2]) == "leq:0");
  CHECK(print_action(reals[3]) == "leq:1");

  TypePtr rr = t_arrow(t_real(), t_real());
  CHECK(rational_label_family(rr, 0, grid).size() == 4);
  CHECK(rational_label_family(rr, 1, grid).size() == 4);

  TypePtr second_order = t_arrow(rr, t_real());
  std::vector<AppAction> shallow = rational_label_family(second_order, 0, grid);
  std::vector<AppAction> deep = rational_label_family(second_order, 1, grid);
  CHECK(shallow.size() == 2);
  CHECK(deep.size() == 5);
  std::set<std::string> deep_prints;
  for (const auto& a : deep) deep_prints.insert(print_action(a));
  for (const auto& a : shallow) CHECK(deep_prints.count(print_action(a)));

  TypePtr opt = parse_type("sum {none: real, some: real}");
  std::vector<AppAction> sums = rational_label_family(opt, 1, grid);
  std::set<std::string> prints;
  for (const auto& a : sums) prints.insert(print_action(a));
  CHECK(prints.count("case:none"));
  CHECK(prints.count("case:some"));

  std::vector<AppAction> mus = rational_label_family(parse_type("mu a. real"), 1, grid);
  std::set<std::string> mu_prints;
  for (const auto& a : mus) mu_prints.insert(print_action(a));
  CHECK(mu_prints.count("unbox"));
}

TEST_CASE("actions print and parse both ways") {
  for (const char* text : {"eval", "unbox", "leq:1/2", "leq:-1/2", "case:some", "type:real",
                           "type:(real -> real)", "pass:{lam x: real. x}", "pass:{0}"}) {
    AppAction a = parse_action(text);
    CHECK(print_action(a) == text);
  }
  CHECK_THROWS(parse_action("leq:"));
  CHECK_THROWS(parse_action("nonsense"));
  CHECK_THROWS(parse_action("pass:{"));
}

TEST_CASE("state printing distinguishes kinds") {
  AppState v = AppState::of_value(v_real(1.0), t_real());
  AppState m = AppState::of_term(parse_term("add(1.0, 0.0)"), t_real());
  CHECK(v.print() != m.print());
  CHECK(v.print().find("(1 : real)") != std::string::npos);
}

TEST_CASE("default threshold grid") {
  std::vector<Rational> g = default_rational_grid();
  REQUIRE(g.size() == 5);
  CHECK(g.front() == Rational(0, 1));
  CHECK(g.back() == Rational(1, 1));
  CHECK(g[2] == Rational(1, 2));
}
