#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lmplambda/lmp.hpp"
#include "lmplambda/measures.hpp"
#include "lmplambda/semantics.hpp"
#include "lmplambda/syntax.hpp"

namespace lmplambda {

// ---------------------------------------------------------------------------
// Modal formulas over finite LMPs
// ---------------------------------------------------------------------------

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct FTop {};
struct FAnd { FormulaPtr a; FormulaPtr b; };
struct FDiamond { std::string label; Rational q; FormulaPtr body; };

struct Formula {
  std::variant<FTop, FAnd, FDiamond> node;
};

FormulaPtr f_top();
FormulaPtr f_and(FormulaPtr a, FormulaPtr b);
FormulaPtr f_diamond(const std::string& label, Rational q, FormulaPtr body);
std::string print_formula(const FormulaPtr& f);

// ---------------------------------------------------------------------------
// Tests: w | label.t | (t & t). Labels are printed actions for the
// applicative LMP and bare label names for finite LMPs.
// ---------------------------------------------------------------------------

struct Test;
using TestPtr = std::shared_ptr<const Test>;

struct TOmega {};
struct TConj { TestPtr a; TestPtr b; };
struct TAct { std::string label; TestPtr rest; };

struct Test {
  std::variant<TOmega, TConj, TAct> node;
};

TestPtr t_omega();
TestPtr t_conj(TestPtr a, TestPtr b);
TestPtr t_act(const std::string& label, TestPtr rest);
std::string print_test(const TestPtr& t);
TestPtr parse_test(const std::string& text);
int test_size(const TestPtr& t); // action + conjunction node count

// ---------------------------------------------------------------------------
// Finite-LMP algorithms (exact)
// ---------------------------------------------------------------------------

// coarsest partition whose blocks get equal mass from related states under
// every label; iterated signature splitting to fixpoint
EquivRelation state_bisim_finite(const FiniteLMP& l);

bool is_bisimulation(const FiniteLMP& l, const EquivRelation& r);

bool logic_sat_finite(const FiniteLMP& l, const std::string& state, const FormulaPtr& phi);

// partition by satisfaction of formulas up to modal depth d; an empty
// threshold grid means thresholds are read off the observed kernel masses
EquivRelation logical_equiv_finite(const FiniteLMP& l, int depth,
                                   const std::vector<Rational>& grid = {});

// k/2^j for 0 <= k <= 2^j, deduplicated and sorted
std::vector<Rational> dyadic_rationals(int j = 6);

double test_success_finite(const FiniteLMP& l, const std::string& state, const TestPtr& t);

// partition by exact success values of tests up to modal depth d
EquivRelation test_equiv_finite(const FiniteLMP& l, int depth);

// ---------------------------------------------------------------------------
// Applicative-LMP tests, Monte Carlo and exact-grid evaluation
// ---------------------------------------------------------------------------

struct McEstimate {
  double mean = 0.0;
  double half = 0.0; // 3-sigma half width
  size_t samples = 0;
};

McEstimate test_success_mc(const AppState& s, const TestPtr& t, size_t samples, long fuel,
                           uint64_t seed, uint64_t stream = 0,
                           LanguageMode mode = LanguageMode::Full);

// deterministic oracle on the midpoint grid; Eval steps integrate the exact
// grid distribution of the current term
double test_success_grid(const AppState& s, const TestPtr& t, long fuel, int grid_points,
                         int max_draws = 4, LanguageMode mode = LanguageMode::Full);

// canonical test enumeration for a state kind and type: sizes ascending, then
// print order; type loops and eval self-loops are omitted as non-separating
std::vector<TestPtr> enumerate_tests(bool value_kind, const TypePtr& ty, int depth,
                                     const std::vector<Rational>& grid, size_t budget);

// ---------------------------------------------------------------------------
// Comparison reports
// ---------------------------------------------------------------------------

struct EquivalenceReport {
  std::string verdict; // DISTINGUISHED | NOT_SEPARATED_WITHIN_BUDGET | EQUAL_EXACT
  Json witness;        // replayable: kind + text + stats + seeds
  Json budget;
  std::vector<uint64_t> seeds;
  double max_gap = 0.0; // largest standardized difference seen
  Json to_json() const;
};

struct CompareOptions {
  size_t samples = 100000;
  size_t test_samples = 10000;
  long fuel = 10000;
  uint64_t seed = 1;
  int depth = 1;
  std::vector<Rational> grid = default_rational_grid();
  size_t test_budget = 200;
  bool use_tests = true;
  bool use_contexts = true;
  LanguageMode mode = LanguageMode::Full;
  double alpha = 0.01;
};

EquivalenceReport distinguish_by_tests(const AppState& a, const AppState& b,
                                       const CompareOptions& opt);

// ---------------------------------------------------------------------------
// Observable contexts
// ---------------------------------------------------------------------------

struct ObservableContext {
  std::string name;
  std::string source;
  TermPtr ctx; // contains [.]
};

std::vector<ObservableContext> default_context_battery(const TypePtr& hole_type);

EmpiricalMeasure context_apply_estimate(const TermPtr& ctx, const TermPtr& m, size_t samples,
                                        long fuel, uint64_t seed, uint64_t stream = 0,
                                        LanguageMode mode = LanguageMode::Full);

// disjoint 3-sigma comparison of two empirical measures: total mass, heavy
// atoms, then KS on the remaining real samples at the given level
std::optional<Json> empirical_distinct(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                                       double alpha, double* max_gap = nullptr);

EquivalenceReport compare_programs(const TermPtr& m, const TermPtr& n,
                                   const CompareOptions& opt);

// ---------------------------------------------------------------------------
// Shipped example programs and the claim battery over them
// ---------------------------------------------------------------------------

namespace corpus {
TermPtr uniform_program();           // sample
TermPtr normal_std_program();        // Box-Muller
TermPtr bernoulli_fair_program();    // fair choice between 0 and 1
TermPtr ce_state_M();                // let x = sample in lam y. if eq(x,y) then 1 else 0
TermPtr ce_state_N();                // let x = sample in lam y. 0
TermPtr ce_soundness_M();            // key-revealing variant, fair choice with x
TermPtr ce_soundness_N();
TermPtr self_app_context();          // (lam z. z (z 1)) [.]
} // namespace corpus

struct CorpusOptions {
  size_t samples = 100000;
  size_t test_samples = 10000;
  long fuel = 10000;
  uint64_t seed = 1;
  size_t test_budget = 200;
};

Json corpus_check(const CorpusOptions& opt);

} // namespace lmplambda
