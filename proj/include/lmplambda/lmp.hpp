#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lmplambda/semantics.hpp"
#include "lmplambda/syntax.hpp"

namespace lmplambda {

// ---------------------------------------------------------------------------
// Finite LMPs with explicit kernel matrices
// ---------------------------------------------------------------------------

struct FiniteLMP {
  std::vector<std::string> states;
  std::vector<std::string> labels;
  std::map<std::string, std::vector<std::vector<double>>> kernels; // label -> |S| x |S|

  int state_index(const std::string& s) const;
  const std::vector<std::vector<double>>& kernel(const std::string& label) const;
  void validate() const;
  Json to_json() const;
  static FiniteLMP from_json(const Json& j);
  static FiniteLMP load(const std::string& path);
};

// ---------------------------------------------------------------------------
// Exact rationals for labels and thresholds
// ---------------------------------------------------------------------------

struct Rational {
  long long num = 0;
  long long den = 1; // > 0, reduced

  Rational() = default;
  Rational(long long n, long long d);
  static Rational parse(const std::string& s); // "3", "-1/2"
  double value() const { return (double)num / (double)den; }
  std::string print() const;
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  bool operator<(const Rational& o) const { return num * o.den < o.num * den; }
};

// ---------------------------------------------------------------------------
// The applicative LMP: states are closed typed terms or values
// ---------------------------------------------------------------------------

struct AppState {
  bool is_value = false;
  TermPtr term;  // set when !is_value
  ValuePtr value; // set when is_value
  TypePtr type;

  static AppState of_term(TermPtr m, TypePtr ty);
  static AppState of_value(ValuePtr v, TypePtr ty);
  std::string print() const;
};

struct ATypeLoop { TypePtr ty; };
struct APassValue { ValuePtr v; TypePtr ty; };
struct AEval {};
struct ALeqTest { Rational q; };
struct ACaseProbe { std::string tag; };
struct AUnbox {};

struct AppAction {
  std::variant<ATypeLoop, APassValue, AEval, ALeqTest, ACaseProbe, AUnbox> node;
};

AppAction act_type_loop(TypePtr ty);
AppAction act_pass(ValuePtr v, TypePtr ty);
AppAction act_eval();
AppAction act_leq(Rational q);
AppAction act_case(const std::string& tag);
AppAction act_unbox();

std::string print_action(const AppAction& a);
// inverse of print_action; PassValue payload types are synthesized
AppAction parse_action(const std::string& text);

struct StepDirac { AppState to; };
struct StepWeighted { double weight; AppState to; };
struct StepEval { TermPtr term; TypePtr type; }; // handle: sample the evaluator
struct StepNull {};

struct AppStep {
  std::variant<StepDirac, StepWeighted, StepEval, StepNull> node;
};

// total transition table; every unlisted pair is the empty subdistribution
AppStep app_step(const AppState& s, const AppAction& a, LanguageMode mode = LanguageMode::Full);

// ---------------------------------------------------------------------------
// The countable restriction of the action family: values built from a finite
// rational grid up to a structural depth bound, in canonical order
// ---------------------------------------------------------------------------

std::vector<ValuePtr> enumerate_rational_values(const TypePtr& ty, int depth,
                                                const std::vector<Rational>& grid,
                                                size_t cap = 4096);

std::vector<AppAction> rational_label_family(const TypePtr& ty, int depth,
                                             const std::vector<Rational>& grid,
                                             size_t value_cap = 512);

std::vector<Rational> default_rational_grid(); // {0, 1/4, 1/2, 3/4, 1}

} // namespace lmplambda
