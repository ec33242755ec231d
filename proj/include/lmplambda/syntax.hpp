#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace lmplambda {

struct Type;
struct Term;
struct Value;
using TypePtr = std::shared_ptr<const Type>;
using TermPtr = std::shared_ptr<const Term>;
using ValuePtr = std::shared_ptr<const Value>;

// ---------------------------------------------------------------------------
// Types: real | type variable | finite tagged sum | arrow | recursive
// ---------------------------------------------------------------------------

struct TReal {};
struct TVarT { std::string name; };
struct TSum { std::vector<std::pair<std::string, TypePtr>> variants; };
struct TArrow { TypePtr from; TypePtr to; };
struct TMu { std::string var; TypePtr body; };

struct Type {
  std::variant<TReal, TVarT, TSum, TArrow, TMu> node;
};

TypePtr t_real();
TypePtr t_var(const std::string& name);
TypePtr t_sum(std::vector<std::pair<std::string, TypePtr>> variants);
TypePtr t_arrow(TypePtr from, TypePtr to);
TypePtr t_mu(const std::string& var, TypePtr body);

// unit, bool and void are derived forms, not new type constructors
TypePtr t_void();
TypePtr t_unit();
TypePtr t_bool();

bool type_equal(const TypePtr& a, const TypePtr& b);
TypePtr type_subst(const TypePtr& t, const std::string& var, const TypePtr& repl);
bool type_closed(const TypePtr& t);
std::string print_type(const TypePtr& t);

// ---------------------------------------------------------------------------
// Values and terms. Values are a syntactic subclass; a value occurs as a term
// only through TVal. VHole is the numbered real placeholder of pre-terms and
// never appears in a runnable program.
// ---------------------------------------------------------------------------

struct VVar { std::string name; };
struct VReal { double r; };
struct VInj { std::string tag; ValuePtr payload; TypePtr ann; };
struct VLam { std::string var; TypePtr ty; TermPtr body; };
struct VFold { ValuePtr payload; TypePtr ann; };
struct VHole { int index; };

struct Value {
  std::variant<VVar, VReal, VInj, VLam, VFold, VHole> node;
};

struct CaseBranch { std::string tag; std::string var; TermPtr body; };

struct TVal { ValuePtr v; };
struct TSample {};
struct TPrimC { std::string name; std::vector<ValuePtr> args; };
struct TPrimB { std::string name; std::vector<ValuePtr> args; };
struct TCase { ValuePtr scrutinee; std::vector<CaseBranch> branches; };
struct TApp { ValuePtr fn; ValuePtr arg; };
struct TLet { std::string var; TermPtr bound; TermPtr body; };
struct TUnfold { ValuePtr v; };
struct TCtxHole {};

struct Term {
  std::variant<TVal, TSample, TPrimC, TPrimB, TCase, TApp, TLet, TUnfold, TCtxHole> node;
};

ValuePtr v_var(const std::string& name);
ValuePtr v_real(double r);
ValuePtr v_inj(const std::string& tag, ValuePtr payload, TypePtr ann = nullptr);
ValuePtr v_lam(const std::string& var, TypePtr ty, TermPtr body);
ValuePtr v_fold(ValuePtr payload, TypePtr ann = nullptr);
ValuePtr v_hole(int index);

TermPtr m_val(ValuePtr v);
TermPtr m_sample();
TermPtr m_primc(const std::string& name, std::vector<ValuePtr> args);
TermPtr m_primb(const std::string& name, std::vector<ValuePtr> args);
TermPtr m_case(ValuePtr scrutinee, std::vector<CaseBranch> branches);
TermPtr m_app(ValuePtr fn, ValuePtr arg);
TermPtr m_let(const std::string& var, TermPtr bound, TermPtr body);
TermPtr m_unfold(ValuePtr v);
TermPtr m_ctx_hole();

bool value_equal(const ValuePtr& a, const ValuePtr& b);
bool term_equal(const TermPtr& a, const TermPtr& b);

std::string print_value(const ValuePtr& v);
std::string print_term(const TermPtr& m);

// Free term variables.
std::vector<std::string> free_vars(const TermPtr& m);
bool term_closed(const TermPtr& m);

// Capture-avoiding substitution of a value for a free variable.
ValuePtr substitute(const ValuePtr& v, const std::string& var, const ValuePtr& repl);
TermPtr substitute(const TermPtr& m, const std::string& var, const ValuePtr& repl);

// Replaces every context hole [.] by the given term; plain grafting, binders
// in the context may capture free variables of the plug.
TermPtr graft(const TermPtr& ctx, const TermPtr& plug);
bool has_ctx_hole(const TermPtr& m);

// ---------------------------------------------------------------------------
// Primitive registry. Continuous real functions are available in both modes;
// everything else (discontinuous reals, boolean tests) only in full mode.
// ---------------------------------------------------------------------------

enum class LanguageMode { Full, Continuous };

struct PrimEntry {
  std::string name;
  int arity = 0;
  bool continuous = false;
  double (*fn)(const double*) = nullptr;
};

const std::vector<PrimEntry>& prim_registry();
const PrimEntry* prim_lookup(const std::string& name);
bool prim_admissible(const std::string& name, LanguageMode mode);
double prim_apply(const std::string& name, const std::vector<double>& args);
bool bool_test_apply(const std::string& name, const std::vector<double>& args);
bool bool_test_known(const std::string& name);

// Comparison used by threshold actions: exact indicator in full mode, the
// clamped ramp (slope 1/eps) in continuous mode. Both are 1 exactly on x <= y.
double op_leq(double x, double y, LanguageMode mode, double eps = 1.0);

// ---------------------------------------------------------------------------
// Environments and type checking
// ---------------------------------------------------------------------------

struct Environment {
  std::vector<std::pair<std::string, TypePtr>> binds;
  std::optional<TypePtr> lookup(const std::string& name) const;
  Environment extend(const std::string& name, TypePtr ty) const;
};

struct TypeError : std::runtime_error {
  explicit TypeError(const std::string& what) : std::runtime_error(what) {}
};

// Synthesizes the unique type, or throws TypeError. Unannotated inj/fold are
// only accepted where the expected type is known from context.
TypePtr typecheck(const Environment& env, const TermPtr& m,
                  LanguageMode mode = LanguageMode::Full);
TypePtr typecheck_value(const Environment& env, const ValuePtr& v,
                        LanguageMode mode = LanguageMode::Full);
void check_term(const Environment& env, const TermPtr& m, const TypePtr& expect,
                LanguageMode mode = LanguageMode::Full);

// ---------------------------------------------------------------------------
// Pre-terms: real literals replaced by holes numbered 1..n in print order.
// ---------------------------------------------------------------------------

struct PreTerm {
  TermPtr skeleton;
  int hole_count = 0;
};

struct Factorized {
  PreTerm pre;
  std::vector<double> reals;
};

Factorized factorize(const TermPtr& m);
TermPtr fill(const PreTerm& pre, const std::vector<double>& reals);
ValuePtr fill_value(const ValuePtr& pre_value, const std::vector<double>& reals);
int count_holes(const TermPtr& m);
int count_holes_value(const ValuePtr& v);

// ---------------------------------------------------------------------------
// Parser for the surface syntax (.lp files, "--" comments)
// ---------------------------------------------------------------------------

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

TermPtr parse_term(const std::string& src);
TypePtr parse_type(const std::string& src);
TermPtr parse_file(const std::string& path);

// ---------------------------------------------------------------------------
// Derived forms
// ---------------------------------------------------------------------------

namespace sugar {

ValuePtr unit_value();
ValuePtr true_value();
ValuePtr false_value();

// case on bool; the branch variables are fresh and unused
TermPtr if_then_else(const ValuePtr& cond, const TermPtr& then_t, const TermPtr& else_t);
TermPtr if_term(const TermPtr& cond, const TermPtr& then_t, const TermPtr& else_t);

// evaluates p, draws x, then runs m if x < p else n; the untaken branch
// is never evaluated
TermPtr bernoulli(const TermPtr& m, const TermPtr& n, const TermPtr& p);

// Box-Muller from two uniform draws
TermPtr normal_std();
TermPtr normal(const TermPtr& mean, const TermPtr& stddev);

// value application sugar: v m  =  let x = m in v x
TermPtr apply_value_term(const ValuePtr& v, const TermPtr& m);
// term application sugar: m n  =  let x = m in x n
TermPtr apply_term_term(const TermPtr& m, const TermPtr& n);

// fixpoint through the recursive type mu a. (a -> (sigma -> tau));
// body must be a lambda of type sigma -> tau with fname free in it
TermPtr fix(const std::string& fname, const TypePtr& sigma, const TypePtr& tau,
            const ValuePtr& body);

// diverging term of type real
TermPtr omega();

} // namespace sugar

// Deterministic fresh name: base decorated until it avoids every name in used.
std::string fresh_name(const std::string& base, const std::vector<std::string>& used);

} // namespace lmplambda
