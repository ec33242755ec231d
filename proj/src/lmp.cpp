#include "lmplambda/lmp.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

namespace lmplambda {

// ---------------------------------------------------------------------------
// finite LMPs
// ---------------------------------------------------------------------------

int FiniteLMP::state_index(const std::string& s) const {
  for (size_t i = 0; i < states.size(); ++i)
    if (states[i] == s) return (int)i;
  throw std::runtime_error("lmp: unknown state " + s);
}

const std::vector<std::vector<double>>& FiniteLMP::kernel(const std::string& label) const {
  auto it = kernels.find(label);
  if (it == kernels.end()) throw std::runtime_error("lmp: unknown label " + label);
  return it->second;
}

void FiniteLMP::validate() const {
  if (states.empty()) throw std::runtime_error("lmp: no states");
  std::set<std::string> seen(states.begin(), states.end());
  if (seen.size() != states.size()) throw std::runtime_error("lmp: duplicate state names");
  std::set<std::string> lab(labels.begin(), labels.end());
  if (lab.size() != labels.size()) throw std::runtime_error("lmp: duplicate labels");
  if (kernels.size() != labels.size())
    throw std::runtime_error("lmp: kernels do not match the label list");
  for (const auto& l : labels) {
    auto it = kernels.find(l);
    if (it == kernels.end()) throw std::runtime_error("lmp: missing kernel for label " + l);
    const auto& mat = it->second;
    if (mat.size() != states.size())
      throw std::runtime_error("lmp: kernel " + l + " has wrong row count");
    for (const auto& row : mat) {
      if (row.size() != states.size())
        throw std::runtime_error("lmp: kernel " + l + " has wrong column count");
      double sum = 0;
      for (double x : row) {
        if (!(x >= 0)) throw std::runtime_error("lmp: negative entry in kernel " + l);
        sum += x;
      }
      if (sum > 1.0 + 1e-12)
        throw std::runtime_error("lmp: row sum " + std::to_string(sum) + " in kernel " + l);
    }
  }
}

Json FiniteLMP::to_json() const {
  Json j;
  j["states"] = states;
  j["labels"] = labels;
  Json k;
  for (const auto& l : labels) k[l] = kernels.at(l);
  j["kernels"] = k;
  return j;
}

FiniteLMP FiniteLMP::from_json(const Json& j) {
  FiniteLMP l;
  if (!j.is_object() || !j.contains("states") || !j.contains("labels") || !j.contains("kernels"))
    throw std::runtime_error("lmp: expected {states, labels, kernels}");
  for (const auto& s : j.at("states")) l.states.push_back(s.get<std::string>());
  for (const auto& s : j.at("labels")) l.labels.push_back(s.get<std::string>());
  for (const auto& [key, mat] : j.at("kernels").items()) {
    if (std::find(l.labels.begin(), l.labels.end(), key) == l.labels.end())
      throw std::runtime_error("lmp: kernel for undeclared label " + key);
    std::vector<std::vector<double>> m;
    for (const auto& row : mat) m.push_back(row.get<std::vector<double>>());
    l.kernels[key] = std::move(m);
  }
  l.validate();
  return l;
}

FiniteLMP FiniteLMP::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("lmp: cannot open " + path);
  Json j = Json::parse(in);
  return from_json(j);
}

// ---------------------------------------------------------------------------
// rationals
// ---------------------------------------------------------------------------

Rational::Rational(long long n, long long d) {
  if (d == 0) throw std::runtime_error("rational: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  long long g = std::gcd(n < 0 ? -n : n, d);
  if (g == 0) g = 1;
  num = n / g;
  den = d / g;
}

Rational Rational::parse(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return Rational(std::stoll(s), 1);
  return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
}

std::string Rational::print() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

// ---------------------------------------------------------------------------
// applicative LMP
// ---------------------------------------------------------------------------

AppState AppState::of_term(TermPtr m, TypePtr ty) {
  AppState s;
  s.is_value = false;
  s.term = std::move(m);
  s.type = std::move(ty);
  return s;
}

AppState AppState::of_value(ValuePtr v, TypePtr ty) {
  AppState s;
  s.is_value = true;
  s.value = std::move(v);
  s.type = std::move(ty);
  return s;
}

std::string AppState::print() const {
  std::string body = is_value ? print_value(value) : print_term(term);
  return "(" + body + " : " + print_type(type) + ")";
}

AppAction act_type_loop(TypePtr ty) { return {ATypeLoop{std::move(ty)}}; }
AppAction act_pass(ValuePtr v, TypePtr ty) { return {APassValue{std::move(v), std::move(ty)}}; }
AppAction act_eval() { return {AEval{}}; }
AppAction act_leq(Rational q) { return {ALeqTest{q}}; }
AppAction act_case(const std::string& tag) { return {ACaseProbe{tag}}; }
AppAction act_unbox() { return {AUnbox{}}; }

std::string print_action(const AppAction& a) {
  if (auto* x = std::get_if<ATypeLoop>(&a.node)) return "type:" + print_type(x->ty);
  if (auto* x = std::get_if<APassValue>(&a.node)) return "pass:{" + print_value(x->v) + "}";
  if (std::holds_alternative<AEval>(a.node)) return "eval";
  if (auto* x = std::get_if<ALeqTest>(&a.node)) return "leq:" + x->q.print();
  if (auto* x = std::get_if<ACaseProbe>(&a.node)) return "case:" + x->tag;
  return "unbox";
}

AppAction parse_action(const std::string& text) {
  if (text == "eval") return act_eval();
  if (text == "unbox") return act_unbox();
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw std::runtime_error("action: cannot parse '" + text + "'");
  std::string head = text.substr(0, colon);
  std::string rest = text.substr(colon + 1);
  if (head == "leq") return act_leq(Rational::parse(rest));
  if (head == "case") return act_case(rest);
  if (head == "type") return act_type_loop(parse_type(rest));
  if (head == "pass") {
    if (rest.size() < 2 || rest.front() != '{' || rest.back() != '}')
      throw std::runtime_error("action: pass payload must be brace-wrapped");
    TermPtr m = parse_term(rest.substr(1, rest.size() - 2));
    auto* tv = std::get_if<TVal>(&m->node);
    if (!tv) throw std::runtime_error("action: pass payload is not a value");
    TypePtr ty = typecheck_value({}, tv->v);
    return act_pass(tv->v, ty);
  }
  throw std::runtime_error("action: cannot parse '" + text + "'");
}

AppStep app_step(const AppState& s, const AppAction& a, LanguageMode mode) {
  if (auto* tl = std::get_if<ATypeLoop>(&a.node)) {
    if (type_equal(tl->ty, s.type)) return {StepDirac{s}};
    return {StepNull{}};
  }
  if (std::holds_alternative<AEval>(a.node)) {
    if (s.is_value) return {StepDirac{s}};
    return {StepEval{s.term, s.type}};
  }
  if (!s.is_value) return {StepNull{}};
  if (auto* pv = std::get_if<APassValue>(&a.node)) {
    auto* ar = std::get_if<TArrow>(&s.type->node);
    if (!ar || !type_equal(pv->ty, ar->from)) return {StepNull{}};
    return {StepDirac{AppState::of_term(m_app(s.value, pv->v), ar->to)}};
  }
  if (auto* lq = std::get_if<ALeqTest>(&a.node)) {
    auto* r = std::get_if<VReal>(&s.value->node);
    if (!r || !std::holds_alternative<TReal>(s.type->node)) return {StepNull{}};
    return {StepWeighted{op_leq(r->r, lq->q.value(), mode), s}};
  }
  if (auto* cp = std::get_if<ACaseProbe>(&a.node)) {
    auto* sum = std::get_if<TSum>(&s.type->node);
    auto* inj = std::get_if<VInj>(&s.value->node);
    if (!sum || !inj || inj->tag != cp->tag) return {StepNull{}};
    for (const auto& [tag, comp] : sum->variants)
      if (tag == cp->tag) return {StepDirac{AppState::of_value(inj->payload, comp)}};
    return {StepNull{}};
  }
  auto* mu = std::get_if<TMu>(&s.type->node);
  auto* fold = std::get_if<VFold>(&s.value->node);
  if (!mu || !fold) return {StepNull{}};
  return {StepDirac{AppState::of_value(fold->payload, type_subst(mu->body, mu->var, s.type))}};
}

// ---------------------------------------------------------------------------
// rational value and label enumeration
// ---------------------------------------------------------------------------

namespace {

int value_depth(const ValuePtr& v);

int term_depth(const TermPtr& m) {
  if (auto* x = std::get_if<TVal>(&m->node)) return value_depth(x->v);
  return 1;
}

int value_depth(const ValuePtr& v) {
  if (auto* x = std::get_if<VInj>(&v->node)) return 1 + value_depth(x->payload);
  if (auto* x = std::get_if<VFold>(&v->node)) return 1 + value_depth(x->payload);
  if (auto* x = std::get_if<VLam>(&v->node)) return 1 + term_depth(x->body);
  return 0;
}

void enumerate_into(const TypePtr& ty, int depth, const std::vector<Rational>& grid,
                    size_t cap, std::vector<ValuePtr>& out, std::set<std::string>& seen) {
  auto add = [&](const ValuePtr& v) {
    if (out.size() >= cap) return;
    if (seen.insert(print_value(v)).second) out.push_back(v);
  };
  if (std::holds_alternative<TReal>(ty->node)) {
    for (const auto& q : grid) add(v_real(q.value()));
    return;
  }
  if (depth <= 0) return;
  if (auto* sum = std::get_if<TSum>(&ty->node)) {
    for (const auto& [tag, comp] : sum->variants) {
      std::vector<ValuePtr> payloads;
      std::set<std::string> sub;
      enumerate_into(comp, depth - 1, grid, cap, payloads, sub);
      for (const auto& p : payloads) add(v_inj(tag, p, ty));
    }
    return;
  }
  if (auto* ar = std::get_if<TArrow>(&ty->node)) {
    // bodies: constants of the result type, plus the argument itself
    std::vector<ValuePtr> bodies;
    std::set<std::string> sub;
    enumerate_into(ar->to, depth - 1, grid, cap, bodies, sub);
    if (type_equal(ar->from, ar->to)) bodies.push_back(v_var("x"));
    for (const auto& b : bodies) add(v_lam("x", ar->from, m_val(b)));
    return;
  }
  if (auto* mu = std::get_if<TMu>(&ty->node)) {
    std::vector<ValuePtr> payloads;
    std::set<std::string> sub;
    enumerate_into(type_subst(mu->body, mu->var, ty), depth - 1, grid, cap, payloads, sub);
    for (const auto& p : payloads) add(v_fold(p, ty));
    return;
  }
}

} // namespace

std::vector<ValuePtr> enumerate_rational_values(const TypePtr& ty, int depth,
                                                const std::vector<Rational>& grid, size_t cap) {
  std::vector<ValuePtr> out;
  std::set<std::string> seen;
  enumerate_into(ty, depth, grid, cap, out, seen);
  std::stable_sort(out.begin(), out.end(), [](const ValuePtr& a, const ValuePtr& b) {
    int da = value_depth(a), db = value_depth(b);
    if (da != db) return da < db;
    return print_value(a) < print_value(b);
  });
  return out;
}

std::vector<AppAction> rational_label_family(const TypePtr& ty, int depth,
                                             const std::vector<Rational>& grid,
                                             size_t value_cap) {
  std::vector<AppAction> out;
  out.push_back(act_type_loop(ty));
  out.push_back(act_eval());
  if (std::holds_alternative<TReal>(ty->node)) {
    std::vector<Rational> qs = grid;
    std::sort(qs.begin(), qs.end());
    for (const auto& q : qs) out.push_back(act_leq(q));
  }
  if (auto* sum = std::get_if<TSum>(&ty->node))
    for (const auto& [tag, comp] : sum->variants) out.push_back(act_case(tag));
  if (std::holds_alternative<TMu>(ty->node)) out.push_back(act_unbox());
  if (auto* ar = std::get_if<TArrow>(&ty->node))
    for (const auto& v : enumerate_rational_values(ar->from, depth, grid, value_cap))
      out.push_back(act_pass(v, ar->from));
  return out;
}

std::vector<Rational> default_rational_grid() {
  return {Rational(0, 1), Rational(1, 4), Rational(1, 2), Rational(3, 4), Rational(1, 1)};
}

} // namespace lmplambda
