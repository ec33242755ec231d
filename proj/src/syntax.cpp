#include "lmplambda/syntax.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace lmplambda {

// ---------------------------------------------------------------------------
// constructors
// ---------------------------------------------------------------------------

TypePtr t_real() {
  static TypePtr t = std::make_shared<Type>(Type{TReal{}});
  return t;
}
TypePtr t_var(const std::string& name) { return std::make_shared<Type>(Type{TVarT{name}}); }
TypePtr t_sum(std::vector<std::pair<std::string, TypePtr>> variants) {
  for (size_t i = 0; i < variants.size(); ++i)
    for (size_t j = i + 1; j < variants.size(); ++j)
      if (variants[i].first == variants[j].first)
        throw TypeError("duplicate sum tag: " + variants[i].first);
  return std::make_shared<Type>(Type{TSum{std::move(variants)}});
}
TypePtr t_arrow(TypePtr from, TypePtr to) {
  return std::make_shared<Type>(Type{TArrow{std::move(from), std::move(to)}});
}
TypePtr t_mu(const std::string& var, TypePtr body) {
  return std::make_shared<Type>(Type{TMu{var, std::move(body)}});
}

TypePtr t_void() {
  static TypePtr t = t_sum({});
  return t;
}
TypePtr t_unit() {
  static TypePtr t = t_arrow(t_void(), t_void());
  return t;
}
TypePtr t_bool() {
  static TypePtr t = t_sum({{"tt", t_unit()}, {"ff", t_unit()}});
  return t;
}

ValuePtr v_var(const std::string& name) { return std::make_shared<Value>(Value{VVar{name}}); }
ValuePtr v_real(double r) { return std::make_shared<Value>(Value{VReal{r}}); }
ValuePtr v_inj(const std::string& tag, ValuePtr payload, TypePtr ann) {
  return std::make_shared<Value>(Value{VInj{tag, std::move(payload), std::move(ann)}});
}
ValuePtr v_lam(const std::string& var, TypePtr ty, TermPtr body) {
  return std::make_shared<Value>(Value{VLam{var, std::move(ty), std::move(body)}});
}
ValuePtr v_fold(ValuePtr payload, TypePtr ann) {
  return std::make_shared<Value>(Value{VFold{std::move(payload), std::move(ann)}});
}
ValuePtr v_hole(int index) { return std::make_shared<Value>(Value{VHole{index}}); }

TermPtr m_val(ValuePtr v) { return std::make_shared<Term>(Term{TVal{std::move(v)}}); }
TermPtr m_sample() {
  static TermPtr t = std::make_shared<Term>(Term{TSample{}});
  return t;
}
TermPtr m_primc(const std::string& name, std::vector<ValuePtr> args) {
  return std::make_shared<Term>(Term{TPrimC{name, std::move(args)}});
}
TermPtr m_primb(const std::string& name, std::vector<ValuePtr> args) {
  return std::make_shared<Term>(Term{TPrimB{name, std::move(args)}});
}
TermPtr m_case(ValuePtr scrutinee, std::vector<CaseBranch> branches) {
  return std::make_shared<Term>(Term{TCase{std::move(scrutinee), std::move(branches)}});
}
TermPtr m_app(ValuePtr fn, ValuePtr arg) {
  return std::make_shared<Term>(Term{TApp{std::move(fn), std::move(arg)}});
}
TermPtr m_let(const std::string& var, TermPtr bound, TermPtr body) {
  return std::make_shared<Term>(Term{TLet{var, std::move(bound), std::move(body)}});
}
TermPtr m_unfold(ValuePtr v) { return std::make_shared<Term>(Term{TUnfold{std::move(v)}}); }
TermPtr m_ctx_hole() {
  static TermPtr t = std::make_shared<Term>(Term{TCtxHole{}});
  return t;
}

// ---------------------------------------------------------------------------
// type operations
// ---------------------------------------------------------------------------

namespace {

bool type_equal_rec(const TypePtr& a, const TypePtr& b,
                    std::vector<std::pair<std::string, std::string>>& binders) {
  if (a->node.index() != b->node.index()) return false;
  if (std::holds_alternative<TReal>(a->node)) return true;
  if (auto* va = std::get_if<TVarT>(&a->node)) {
    const auto& vb = std::get<TVarT>(b->node);
    for (auto it = binders.rbegin(); it != binders.rend(); ++it) {
      if (it->first == va->name || it->second == vb.name)
        return it->first == va->name && it->second == vb.name;
    }
    return va->name == vb.name;
  }
  if (auto* sa = std::get_if<TSum>(&a->node)) {
    const auto& sb = std::get<TSum>(b->node);
    if (sa->variants.size() != sb.variants.size()) return false;
    for (size_t i = 0; i < sa->variants.size(); ++i) {
      if (sa->variants[i].first != sb.variants[i].first) return false;
      if (!type_equal_rec(sa->variants[i].second, sb.variants[i].second, binders)) return false;
    }
    return true;
  }
  if (auto* aa = std::get_if<TArrow>(&a->node)) {
    const auto& ab = std::get<TArrow>(b->node);
    return type_equal_rec(aa->from, ab.from, binders) && type_equal_rec(aa->to, ab.to, binders);
  }
  const auto& ma = std::get<TMu>(a->node);
  const auto& mb = std::get<TMu>(b->node);
  binders.emplace_back(ma.var, mb.var);
  bool ok = type_equal_rec(ma.body, mb.body, binders);
  binders.pop_back();
  return ok;
}

void type_free_vars(const TypePtr& t, std::vector<std::string>& bound, std::set<std::string>& out) {
  if (std::holds_alternative<TReal>(t->node)) return;
  if (auto* v = std::get_if<TVarT>(&t->node)) {
    if (std::find(bound.begin(), bound.end(), v->name) == bound.end()) out.insert(v->name);
    return;
  }
  if (auto* s = std::get_if<TSum>(&t->node)) {
    for (const auto& [tag, ty] : s->variants) type_free_vars(ty, bound, out);
    return;
  }
  if (auto* a = std::get_if<TArrow>(&t->node)) {
    type_free_vars(a->from, bound, out);
    type_free_vars(a->to, bound, out);
    return;
  }
  const auto& m = std::get<TMu>(t->node);
  bound.push_back(m.var);
  type_free_vars(m.body, bound, out);
  bound.pop_back();
}

} // namespace

bool type_equal(const TypePtr& a, const TypePtr& b) {
  std::vector<std::pair<std::string, std::string>> binders;
  return type_equal_rec(a, b, binders);
}

bool type_closed(const TypePtr& t) {
  std::set<std::string> fv;
  std::vector<std::string> bound;
  type_free_vars(t, bound, fv);
  return fv.empty();
}

TypePtr type_subst(const TypePtr& t, const std::string& var, const TypePtr& repl) {
  if (std::holds_alternative<TReal>(t->node)) return t;
  if (auto* v = std::get_if<TVarT>(&t->node)) return v->name == var ? repl : t;
  if (auto* s = std::get_if<TSum>(&t->node)) {
    std::vector<std::pair<std::string, TypePtr>> vs;
    vs.reserve(s->variants.size());
    for (const auto& [tag, ty] : s->variants) vs.emplace_back(tag, type_subst(ty, var, repl));
    return std::make_shared<Type>(Type{TSum{std::move(vs)}});
  }
  if (auto* a = std::get_if<TArrow>(&t->node))
    return t_arrow(type_subst(a->from, var, repl), type_subst(a->to, var, repl));
  const auto& m = std::get<TMu>(t->node);
  if (m.var == var) return t;
  std::set<std::string> fv;
  std::vector<std::string> bound;
  type_free_vars(repl, bound, fv);
  if (fv.count(m.var)) {
    std::set<std::string> avoid = fv;
    std::vector<std::string> b2;
    type_free_vars(m.body, b2, avoid);
    std::string nv = m.var;
    while (avoid.count(nv)) nv += "'";
    TypePtr renamed = type_subst(m.body, m.var, t_var(nv));
    return t_mu(nv, type_subst(renamed, var, repl));
  }
  return t_mu(m.var, type_subst(m.body, var, repl));
}

std::string print_type(const TypePtr& t) {
  if (std::holds_alternative<TReal>(t->node)) return "real";
  if (auto* v = std::get_if<TVarT>(&t->node)) return v->name;
  if (auto* s = std::get_if<TSum>(&t->node)) {
    std::string out = "sum {";
    for (size_t i = 0; i < s->variants.size(); ++i) {
      if (i) out += ", ";
      out += s->variants[i].first + ": " + print_type(s->variants[i].second);
    }
    out += "}";
    return out;
  }
  if (auto* a = std::get_if<TArrow>(&t->node))
    return "(" + print_type(a->from) + " -> " + print_type(a->to) + ")";
  const auto& m = std::get<TMu>(t->node);
  return "mu " + m.var + ". " + print_type(m.body);
}

// ---------------------------------------------------------------------------
// printing
// ---------------------------------------------------------------------------

namespace {

std::string print_real(double r) {
  if (std::isnan(r)) return "nan";
  if (std::isinf(r)) return r > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", r);
  double back = std::strtod(buf, nullptr);
  if (back == r) {
    for (int prec = 1; prec <= 16; ++prec) {
      char b2[64];
      std::snprintf(b2, sizeof(b2), "%.*g", prec, r);
      if (std::strtod(b2, nullptr) == r) return b2;
    }
  }
  return buf;
}

} // namespace

std::string print_value(const ValuePtr& v) {
  if (auto* x = std::get_if<VVar>(&v->node)) return x->name;
  if (auto* x = std::get_if<VReal>(&v->node)) return print_real(x->r);
  if (auto* x = std::get_if<VInj>(&v->node)) {
    std::string core = "inj " + x->tag + " " + print_value(x->payload);
    if (x->ann) return "(" + core + " : " + print_type(x->ann) + ")";
    return core;
  }
  if (auto* x = std::get_if<VLam>(&v->node))
    return "lam " + x->var + ": " + print_type(x->ty) + ". " + print_term(x->body);
  if (auto* x = std::get_if<VFold>(&v->node)) {
    std::string core = "fold " + print_value(x->payload);
    if (x->ann) return "(" + core + " : " + print_type(x->ann) + ")";
    return core;
  }
  const auto& h = std::get<VHole>(v->node);
  return "[" + std::to_string(h.index) + "]";
}

std::string print_term(const TermPtr& m) {
  if (auto* x = std::get_if<TVal>(&m->node)) {
    const ValuePtr& v = x->v;
    if (std::holds_alternative<VLam>(v->node) || std::holds_alternative<VInj>(v->node) ||
        std::holds_alternative<VFold>(v->node))
      return print_value(v);
    return print_value(v);
  }
  if (std::holds_alternative<TSample>(m->node)) return "sample";
  if (auto* x = std::get_if<TPrimC>(&m->node)) {
    std::string out = x->name + "(";
    for (size_t i = 0; i < x->args.size(); ++i) {
      if (i) out += ", ";
      out += print_value(x->args[i]);
    }
    return out + ")";
  }
  if (auto* x = std::get_if<TPrimB>(&m->node)) {
    std::string out = x->name + "(";
    for (size_t i = 0; i < x->args.size(); ++i) {
      if (i) out += ", ";
      out += print_value(x->args[i]);
    }
    return out + ")";
  }
  if (auto* x = std::get_if<TCase>(&m->node)) {
    std::string out = "case " + print_value(x->scrutinee) + " {";
    for (size_t i = 0; i < x->branches.size(); ++i) {
      if (i) out += " ";
      out += x->branches[i].tag + " " + x->branches[i].var + " => " +
             print_term(x->branches[i].body);
    }
    return out + "}";
  }
  if (auto* x = std::get_if<TApp>(&m->node)) {
    auto wrap = [](const ValuePtr& v) {
      std::string s = print_value(v);
      if (std::holds_alternative<VLam>(v->node) || std::holds_alternative<VInj>(v->node) ||
          (std::holds_alternative<VFold>(v->node) && !std::get<VFold>(v->node).ann))
        return "(" + s + ")";
      return s;
    };
    return wrap(x->fn) + " " + wrap(x->arg);
  }
  if (auto* x = std::get_if<TLet>(&m->node))
    return "let " + x->var + " = " + print_term(x->bound) + " in " + print_term(x->body);
  if (auto* x = std::get_if<TUnfold>(&m->node)) {
    std::string s = print_value(x->v);
    if (std::holds_alternative<VLam>(x->v->node) ||
        (std::holds_alternative<VFold>(x->v->node) && !std::get<VFold>(x->v->node).ann) ||
        std::holds_alternative<VInj>(x->v->node))
      s = "(" + s + ")";
    return "unfold " + s;
  }
  return "[.]";
}

// ---------------------------------------------------------------------------
// equality
// ---------------------------------------------------------------------------

bool value_equal(const ValuePtr& a, const ValuePtr& b) {
  if (a.get() == b.get()) return true;
  if (a->node.index() != b->node.index()) return false;
  if (auto* x = std::get_if<VVar>(&a->node)) return x->name == std::get<VVar>(b->node).name;
  if (auto* x = std::get_if<VReal>(&a->node)) {
    double ra = x->r, rb = std::get<VReal>(b->node).r;
    if (std::isnan(ra) && std::isnan(rb)) return true;
    return ra == rb;
  }
  if (auto* x = std::get_if<VInj>(&a->node)) {
    const auto& y = std::get<VInj>(b->node);
    if (x->tag != y.tag || !value_equal(x->payload, y.payload)) return false;
    if (!!x->ann != !!y.ann) return false;
    return !x->ann || type_equal(x->ann, y.ann);
  }
  if (auto* x = std::get_if<VLam>(&a->node)) {
    const auto& y = std::get<VLam>(b->node);
    return x->var == y.var && type_equal(x->ty, y.ty) && term_equal(x->body, y.body);
  }
  if (auto* x = std::get_if<VFold>(&a->node)) {
    const auto& y = std::get<VFold>(b->node);
    if (!value_equal(x->payload, y.payload)) return false;
    if (!!x->ann != !!y.ann) return false;
    return !x->ann || type_equal(x->ann, y.ann);
  }
  return std::get<VHole>(a->node).index == std::get<VHole>(b->node).index;
}

bool term_equal(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->node.index() != b->node.index()) return false;
  if (auto* x = std::get_if<TVal>(&a->node)) return value_equal(x->v, std::get<TVal>(b->node).v);
  if (std::holds_alternative<TSample>(a->node)) return true;
  if (auto* x = std::get_if<TPrimC>(&a->node)) {
    const auto& y = std::get<TPrimC>(b->node);
    if (x->name != y.name || x->args.size() != y.args.size()) return false;
    for (size_t i = 0; i < x->args.size(); ++i)
      if (!value_equal(x->args[i], y.args[i])) return false;
    return true;
  }
  if (auto* x = std::get_if<TPrimB>(&a->node)) {
    const auto& y = std::get<TPrimB>(b->node);
    if (x->name != y.name || x->args.size() != y.args.size()) return false;
    for (size_t i = 0; i < x->args.size(); ++i)
      if (!value_equal(x->args[i], y.args[i])) return false;
    return true;
  }
  if (auto* x = std::get_if<TCase>(&a->node)) {
    const auto& y = std::get<TCase>(b->node);
    if (!value_equal(x->scrutinee, y.scrutinee)) return false;
    if (x->branches.size() != y.branches.size()) return false;
    for (size_t i = 0; i < x->branches.size(); ++i) {
      if (x->branches[i].tag != y.branches[i].tag) return false;
      if (x->branches[i].var != y.branches[i].var) return false;
      if (!term_equal(x->branches[i].body, y.branches[i].body)) return false;
    }
    return true;
  }
  if (auto* x = std::get_if<TApp>(&a->node)) {
    const auto& y = std::get<TApp>(b->node);
    return value_equal(x->fn, y.fn) && value_equal(x->arg, y.arg);
  }
  if (auto* x = std::get_if<TLet>(&a->node)) {
    const auto& y = std::get<TLet>(b->node);
    return x->var == y.var && term_equal(x->bound, y.bound) && term_equal(x->body, y.body);
  }
  if (auto* x = std::get_if<TUnfold>(&a->node))
    return value_equal(x->v, std::get<TUnfold>(b->node).v);
  return true;
}

// ---------------------------------------------------------------------------
// free variables and substitution
// ---------------------------------------------------------------------------

namespace {

void fv_value(const ValuePtr& v, std::vector<std::string>& bound, std::set<std::string>& out);

void fv_term(const TermPtr& m, std::vector<std::string>& bound, std::set<std::string>& out) {
  if (auto* x = std::get_if<TVal>(&m->node)) return fv_value(x->v, bound, out);
  if (std::holds_alternative<TSample>(m->node) || std::holds_alternative<TCtxHole>(m->node))
    return;
  if (auto* x = std::get_if<TPrimC>(&m->node)) {
    for (const auto& a : x->args) fv_value(a, bound, out);
    return;
  }
  if (auto* x = std::get_if<TPrimB>(&m->node)) {
    for (const auto& a : x->args) fv_value(a, bound, out);
    return;
  }
  if (auto* x = std::get_if<TCase>(&m->node)) {
    fv_value(x->scrutinee, bound, out);
    for (const auto& br : x->branches) {
      bound.push_back(br.var);
      fv_term(br.body, bound, out);
      bound.pop_back();
    }
    return;
  }
  if (auto* x = std::get_if<TApp>(&m->node)) {
    fv_value(x->fn, bound, out);
    fv_value(x->arg, bound, out);
    return;
  }
  if (auto* x = std::get_if<TLet>(&m->node)) {
    fv_term(x->bound, bound, out);
    bound.push_back(x->var);
    fv_term(x->body, bound, out);
    bound.pop_back();
    return;
  }
  fv_value(std::get<TUnfold>(m->node).v, bound, out);
}

void fv_value(const ValuePtr& v, std::vector<std::string>& bound, std::set<std::string>& out) {
  if (auto* x = std::get_if<VVar>(&v->node)) {
    if (std::find(bound.begin(), bound.end(), x->name) == bound.end()) out.insert(x->name);
    return;
  }
  if (std::holds_alternative<VReal>(v->node) || std::holds_alternative<VHole>(v->node)) return;
  if (auto* x = std::get_if<VInj>(&v->node)) return fv_value(x->payload, bound, out);
  if (auto* x = std::get_if<VLam>(&v->node)) {
    bound.push_back(x->var);
    fv_term(x->body, bound, out);
    bound.pop_back();
    return;
  }
  fv_value(std::get<VFold>(v->node).payload, bound, out);
}

} // namespace

std::vector<std::string> free_vars(const TermPtr& m) {
  std::set<std::string> out;
  std::vector<std::string> bound;
  fv_term(m, bound, out);
  return {out.begin(), out.end()};
}

bool term_closed(const TermPtr& m) { return free_vars(m).empty(); }

std::string fresh_name(const std::string& base, const std::vector<std::string>& used) {
  std::string name = base;
  int i = 0;
  while (std::find(used.begin(), used.end(), name) != used.end())
    name = base + "_" + std::to_string(++i);
  return name;
}

namespace {

struct Subst {
  const std::string& var;
  const ValuePtr& repl;
  std::set<std::string> repl_fv;

  ValuePtr on_value(const ValuePtr& v) {
    if (auto* x = std::get_if<VVar>(&v->node)) return x->name == var ? repl : v;
    if (std::holds_alternative<VReal>(v->node) || std::holds_alternative<VHole>(v->node)) return v;
    if (auto* x = std::get_if<VInj>(&v->node)) {
      ValuePtr p = on_value(x->payload);
      return p == x->payload ? v : v_inj(x->tag, p, x->ann);
    }
    if (auto* x = std::get_if<VLam>(&v->node)) {
      if (x->var == var) return v;
      auto [nv, body] = under_binder(x->var, x->body);
      TermPtr nb = on_term(body);
      if (nv == x->var && nb == x->body) return v;
      return v_lam(nv, x->ty, nb);
    }
    const auto& f = std::get<VFold>(v->node);
    ValuePtr p = on_value(f.payload);
    return p == f.payload ? v : v_fold(p, f.ann);
  }

  std::pair<std::string, TermPtr> under_binder(const std::string& bv, const TermPtr& body) {
    if (!repl_fv.count(bv)) return {bv, body};
    std::set<std::string> avoid = repl_fv;
    std::vector<std::string> bound;
    fv_term(body, bound, avoid);
    avoid.insert(var);
    std::string nb = bv;
    while (avoid.count(nb)) nb += "'";
    Subst rename{bv, v_var(nb), {}};
    return {nb, rename.on_term(body)};
  }

  TermPtr on_term(const TermPtr& m) {
    if (auto* x = std::get_if<TVal>(&m->node)) {
      ValuePtr v = on_value(x->v);
      return v == x->v ? m : m_val(v);
    }
    if (std::holds_alternative<TSample>(m->node) || std::holds_alternative<TCtxHole>(m->node))
      return m;
    if (auto* x = std::get_if<TPrimC>(&m->node)) {
      std::vector<ValuePtr> args;
      args.reserve(x->args.size());
      for (const auto& a : x->args) args.push_back(on_value(a));
      return m_primc(x->name, std::move(args));
    }
    if (auto* x = std::get_if<TPrimB>(&m->node)) {
      std::vector<ValuePtr> args;
      args.reserve(x->args.size());
      for (const auto& a : x->args) args.push_back(on_value(a));
      return m_primb(x->name, std::move(args));
    }
    if (auto* x = std::get_if<TCase>(&m->node)) {
      std::vector<CaseBranch> brs;
      brs.reserve(x->branches.size());
      for (const auto& br : x->branches) {
        if (br.var == var) {
          brs.push_back(br);
          continue;
        }
        auto [nv, body] = under_binder(br.var, br.body);
        brs.push_back({br.tag, nv, on_term(body)});
      }
      return m_case(on_value(x->scrutinee), std::move(brs));
    }
    if (auto* x = std::get_if<TApp>(&m->node)) return m_app(on_value(x->fn), on_value(x->arg));
    if (auto* x = std::get_if<TLet>(&m->node)) {
      TermPtr bound = on_term(x->bound);
      if (x->var == var) return m_let(x->var, bound, x->body);
      auto [nv, body] = under_binder(x->var, x->body);
      return m_let(nv, bound, on_term(body));
    }
    return m_unfold(on_value(std::get<TUnfold>(m->node).v));
  }
};

Subst make_subst(const std::string& var, const ValuePtr& repl) {
  Subst s{var, repl, {}};
  std::vector<std::string> bound;
  fv_value(repl, bound, s.repl_fv);
  return s;
}

} // namespace

ValuePtr substitute(const ValuePtr& v, const std::string& var, const ValuePtr& repl) {
  Subst s = make_subst(var, repl);
  return s.on_value(v);
}

TermPtr substitute(const TermPtr& m, const std::string& var, const ValuePtr& repl) {
  Subst s = make_subst(var, repl);
  return s.on_term(m);
}

// ---------------------------------------------------------------------------
// context grafting
// ---------------------------------------------------------------------------

namespace {

ValuePtr graft_value(const ValuePtr& v, const TermPtr& plug);

TermPtr graft_term(const TermPtr& m, const TermPtr& plug) {
  if (std::holds_alternative<TCtxHole>(m->node)) return plug;
  if (auto* x = std::get_if<TVal>(&m->node)) return m_val(graft_value(x->v, plug));
  if (std::holds_alternative<TSample>(m->node)) return m;
  if (auto* x = std::get_if<TPrimC>(&m->node)) {
    std::vector<ValuePtr> args;
    for (const auto& a : x->args) args.push_back(graft_value(a, plug));
    return m_primc(x->name, std::move(args));
  }
  if (auto* x = std::get_if<TPrimB>(&m->node)) {
    std::vector<ValuePtr> args;
    for (const auto& a : x->args) args.push_back(graft_value(a, plug));
    return m_primb(x->name, std::move(args));
  }
  if (auto* x = std::get_if<TCase>(&m->node)) {
    std::vector<CaseBranch> brs;
    for (const auto& br : x->branches) brs.push_back({br.tag, br.var, graft_term(br.body, plug)});
    return m_case(graft_value(x->scrutinee, plug), std::move(brs));
  }
  if (auto* x = std::get_if<TApp>(&m->node))
    return m_app(graft_value(x->fn, plug), graft_value(x->arg, plug));
  if (auto* x = std::get_if<TLet>(&m->node))
    return m_let(x->var, graft_term(x->bound, plug), graft_term(x->body, plug));
  return m_unfold(graft_value(std::get<TUnfold>(m->node).v, plug));
}

ValuePtr graft_value(const ValuePtr& v, const TermPtr& plug) {
  if (auto* x = std::get_if<VInj>(&v->node)) return v_inj(x->tag, graft_value(x->payload, plug), x->ann);
  if (auto* x = std::get_if<VLam>(&v->node)) return v_lam(x->var, x->ty, graft_term(x->body, plug));
  if (auto* x = std::get_if<VFold>(&v->node)) return v_fold(graft_value(x->payload, plug), x->ann);
  return v;
}

} // namespace

TermPtr graft(const TermPtr& ctx, const TermPtr& plug) { return graft_term(ctx, plug); }

bool has_ctx_hole(const TermPtr& m) {
  if (std::holds_alternative<TCtxHole>(m->node)) return true;
  if (auto* x = std::get_if<TVal>(&m->node)) {
    TermPtr probe = m_val(x->v);
    // values cannot contain [.] directly but lambdas carry term bodies
    if (auto* l = std::get_if<VLam>(&x->v->node)) return has_ctx_hole(l->body);
    if (auto* i = std::get_if<VInj>(&x->v->node)) return has_ctx_hole(m_val(i->payload));
    if (auto* f = std::get_if<VFold>(&x->v->node)) return has_ctx_hole(m_val(f->payload));
    return false;
  }
  if (auto* x = std::get_if<TCase>(&m->node)) {
    if (has_ctx_hole(m_val(x->scrutinee))) return true;
    for (const auto& br : x->branches)
      if (has_ctx_hole(br.body)) return true;
    return false;
  }
  if (auto* x = std::get_if<TApp>(&m->node))
    return has_ctx_hole(m_val(x->fn)) || has_ctx_hole(m_val(x->arg));
  if (auto* x = std::get_if<TLet>(&m->node))
    return has_ctx_hole(x->bound) || has_ctx_hole(x->body);
  if (auto* x = std::get_if<TUnfold>(&m->node)) return has_ctx_hole(m_val(x->v));
  if (auto* x = std::get_if<TPrimC>(&m->node)) {
    for (const auto& a : x->args)
      if (has_ctx_hole(m_val(a))) return true;
  }
  if (auto* x = std::get_if<TPrimB>(&m->node)) {
    for (const auto& a : x->args)
      if (has_ctx_hole(m_val(a))) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// primitive registry
// ---------------------------------------------------------------------------

namespace {

double p_add(const double* a) { return a[0] + a[1]; }
double p_sub(const double* a) { return a[0] - a[1]; }
double p_mul(const double* a) { return a[0] * a[1]; }
double p_neg(const double* a) { return -a[0]; }
double p_id(const double* a) { return a[0]; }
double p_min(const double* a) { return std::min(a[0], a[1]); }
double p_max(const double* a) { return std::max(a[0], a[1]); }
double p_clamp(const double* a) { return std::min(std::max(a[0], a[1]), a[2]); }
// total continuous extensions: the argument is clamped into the domain
double p_log(const double* a) { return std::log(std::max(a[0], 5e-324)); }
double p_exp(const double* a) { return std::exp(std::min(a[0], 700.0)); }
double p_sqrt(const double* a) { return std::sqrt(std::max(a[0], 0.0)); }
double p_cos(const double* a) { return std::cos(a[0]); }
double p_sin(const double* a) { return std::sin(a[0]); }
double p_abs(const double* a) { return std::fabs(a[0]); }
double p_op_le(const double* a) {
  return std::min(std::max(1.0 - (a[0] - a[1]), 0.0), 1.0);
}
double p_div(const double* a) { return a[1] == 0.0 ? 0.0 : a[0] / a[1]; }
double p_step(const double* a) { return a[0] < 0.0 ? 1.0 : 0.0; }
double p_leq(const double* a) { return a[0] <= a[1] ? 1.0 : 0.0; }
double p_eq_ind(const double* a) { return a[0] == a[1] ? 1.0 : 0.0; }
double p_floor(const double* a) { return std::floor(a[0]); }

} // namespace

const std::vector<PrimEntry>& prim_registry() {
  static const std::vector<PrimEntry> table = {
      {"add", 2, true, p_add},     {"sub", 2, true, p_sub},
      {"mul", 2, true, p_mul},     {"neg", 1, true, p_neg},
      {"id", 1, true, p_id},       {"min", 2, true, p_min},
      {"max", 2, true, p_max},     {"clamp", 3, true, p_clamp},
      {"log", 1, true, p_log},     {"exp", 1, true, p_exp},
      {"sqrt", 1, true, p_sqrt},   {"cos", 1, true, p_cos},
      {"sin", 1, true, p_sin},     {"abs", 1, true, p_abs},
      {"op_le", 2, true, p_op_le}, {"div", 2, false, p_div},
      {"step", 1, false, p_step},  {"leq", 2, false, p_leq},
      {"eq_ind", 2, false, p_eq_ind}, {"floor", 1, false, p_floor},
  };
  return table;
}

const PrimEntry* prim_lookup(const std::string& name) {
  for (const auto& e : prim_registry())
    if (e.name == name) return &e;
  return nullptr;
}

bool prim_admissible(const std::string& name, LanguageMode mode) {
  const PrimEntry* e = prim_lookup(name);
  if (!e) return false;
  return mode == LanguageMode::Full || e->continuous;
}

double prim_apply(const std::string& name, const std::vector<double>& args) {
  const PrimEntry* e = prim_lookup(name);
  if (!e) throw std::runtime_error("unknown primitive: " + name);
  if ((int)args.size() != e->arity) throw std::runtime_error("arity mismatch for " + name);
  return e->fn(args.data());
}

bool bool_test_known(const std::string& name) { return name == "eq" || name == "lt"; }

bool bool_test_apply(const std::string& name, const std::vector<double>& args) {
  if (args.size() != 2) throw std::runtime_error("boolean test arity mismatch: " + name);
  if (name == "eq") return args[0] == args[1];
  if (name == "lt") return args[0] < args[1];
  throw std::runtime_error("unknown boolean test: " + name);
}

double op_leq(double x, double y, LanguageMode mode, double eps) {
  if (mode == LanguageMode::Full) return x <= y ? 1.0 : 0.0;
  return std::min(std::max(1.0 - (x - y) / eps, 0.0), 1.0);
}

// ---------------------------------------------------------------------------
// environments
// ---------------------------------------------------------------------------

std::optional<TypePtr> Environment::lookup(const std::string& name) const {
  for (auto it = binds.rbegin(); it != binds.rend(); ++it)
    if (it->first == name) return it->second;
  return std::nullopt;
}

Environment Environment::extend(const std::string& name, TypePtr ty) const {
  Environment out;
  out.binds.reserve(binds.size() + 1);
  for (const auto& b : binds)
    if (b.first != name) out.binds.push_back(b);
  out.binds.emplace_back(name, std::move(ty));
  return out;
}

// ---------------------------------------------------------------------------
// factorize / fill
// ---------------------------------------------------------------------------

namespace {

ValuePtr strip_value(const ValuePtr& v, std::vector<double>& reals);

TermPtr strip_term(const TermPtr& m, std::vector<double>& reals) {
  if (auto* x = std::get_if<TVal>(&m->node)) return m_val(strip_value(x->v, reals));
  if (std::holds_alternative<TSample>(m->node) || std::holds_alternative<TCtxHole>(m->node))
    return m;
  if (auto* x = std::get_if<TPrimC>(&m->node)) {
    std::vector<ValuePtr> args;
    for (const auto& a : x->args) args.push_back(strip_value(a, reals));
    return m_primc(x->name, std::move(args));
  }
  if (auto* x = std::get_if<TPrimB>(&m->node)) {
    std::vector<ValuePtr> args;
    for (const auto& a : x->args) args.push_back(strip_value(a, reals));
    return m_primb(x->name, std::move(args));
  }
  if (auto* x = std::get_if<TCase>(&m->node)) {
    ValuePtr s = strip_value(x->scrutinee, reals);
    std::vector<CaseBranch> brs;
    for (const auto& br : x->branches) brs.push_back({br.tag, br.var, strip_term(br.body, reals)});
    return m_case(std::move(s), std::move(brs));
  }
  if (auto* x = std::get_if<TApp>(&m->node)) {
    ValuePtr f = strip_value(x->fn, reals);
    return m_app(std::move(f), strip_value(x->arg, reals));
  }
  if (auto* x = std::get_if<TLet>(&m->node)) {
    TermPtr b = strip_term(x->bound, reals);
    return m_let(x->var, std::move(b), strip_term(x->body, reals));
  }
  return m_unfold(strip_value(std::get<TUnfold>(m->node).v, reals));
}

ValuePtr strip_value(const ValuePtr& v, std::vector<double>& reals) {
  if (auto* x = std::get_if<VReal>(&v->node)) {
    reals.push_back(x->r);
    return v_hole((int)reals.size());
  }
  if (std::holds_alternative<VVar>(v->node)) return v;
  if (std::holds_alternative<VHole>(v->node))
    throw std::runtime_error("factorize: input already contains holes");
  if (auto* x = std::get_if<VInj>(&v->node)) return v_inj(x->tag, strip_value(x->payload, reals), x->ann);
  if (auto* x = std::get_if<VLam>(&v->node)) return v_lam(x->var, x->ty, strip_term(x->body, reals));
  const auto& f = std::get<VFold>(v->node);
  return v_fold(strip_value(f.payload, reals), f.ann);
}

ValuePtr fill_v(const ValuePtr& v, const std::vector<double>& reals, int& filled);

TermPtr fill_t(const TermPtr& m, const std::vector<double>& reals, int& filled) {
  if (auto* x = std::get_if<TVal>(&m->node)) return m_val(fill_v(x->v, reals, filled));
  if (std::holds_alternative<TSample>(m->node) || std::holds_alternative<TCtxHole>(m->node))
    return m;
  if (auto* x = std::get_if<TPrimC>(&m->node)) {
    std::vector<ValuePtr> args;
    for (const auto& a : x->args) args.push_back(fill_v(a, reals, filled));
    return m_primc(x->name, std::move(args));
  }
  if (auto* x = std::get_if<TPrimB>(&m->node)) {
    std::vector<ValuePtr> args;
    for (const auto& a : x->args) args.push_back(fill_v(a, reals, filled));
    return m_primb(x->name, std::move(args));
  }
  if (auto* x = std::get_if<TCase>(&m->node)) {
    ValuePtr s = fill_v(x->scrutinee, reals, filled);
    std::vector<CaseBranch> brs;
    for (const auto& br : x->branches) brs.push_back({br.tag, br.var, fill_t(br.body, reals, filled)});
    return m_case(std::move(s), std::move(brs));
  }
  if (auto* x = std::get_if<TApp>(&m->node)) {
    ValuePtr f = fill_v(x->fn, reals, filled);
    return m_app(std::move(f), fill_v(x->arg, reals, filled));
  }
  if (auto* x = std::get_if<TLet>(&m->node)) {
    TermPtr b = fill_t(x->bound, reals, filled);
    return m_let(x->var, std::move(b), fill_t(x->body, reals, filled));
  }
  return m_unfold(fill_v(std::get<TUnfold>(m->node).v, reals, filled));
}

ValuePtr fill_v(const ValuePtr& v, const std::vector<double>& reals, int& filled) {
  if (auto* x = std::get_if<VHole>(&v->node)) {
    if (x->index < 1 || x->index > (int)reals.size())
      throw std::runtime_error("fill: hole index out of range");
    ++filled;
    return v_real(reals[x->index - 1]);
  }
  if (std::holds_alternative<VVar>(v->node)) return v;
  if (std::holds_alternative<VReal>(v->node))
    throw std::runtime_error("fill: skeleton contains a real literal");
  if (auto* x = std::get_if<VInj>(&v->node)) return v_inj(x->tag, fill_v(x->payload, reals, filled), x->ann);
  if (auto* x = std::get_if<VLam>(&v->node)) return v_lam(x->var, x->ty, fill_t(x->body, reals, filled));
  const auto& f = std::get<VFold>(v->node);
  return v_fold(fill_v(f.payload, reals, filled), f.ann);
}

void count_holes_v(const ValuePtr& v, int& n);

void count_holes_t(const TermPtr& m, int& n) {
  if (auto* x = std::get_if<TVal>(&m->node)) return count_holes_v(x->v, n);
  if (auto* x = std::get_if<TPrimC>(&m->node)) {
    for (const auto& a : x->args) count_holes_v(a, n);
    return;
  }
  if (auto* x = std::get_if<TPrimB>(&m->node)) {
    for (const auto& a : x->args) count_holes_v(a, n);
    return;
  }
  if (auto* x = std::get_if<TCase>(&m->node)) {
    count_holes_v(x->scrutinee, n);
    for (const auto& br : x->branches) count_holes_t(br.body, n);
    return;
  }
  if (auto* x = std::get_if<TApp>(&m->node)) {
    count_holes_v(x->fn, n);
    count_holes_v(x->arg, n);
    return;
  }
  if (auto* x = std::get_if<TLet>(&m->node)) {
    count_holes_t(x->bound, n);
    count_holes_t(x->body, n);
    return;
  }
  if (auto* x = std::get_if<TUnfold>(&m->node)) count_holes_v(x->v, n);
}

void count_holes_v(const ValuePtr& v, int& n) {
  if (std::holds_alternative<VHole>(v->node)) {
    ++n;
    return;
  }
  if (auto* x = std::get_if<VInj>(&v->node)) return count_holes_v(x->payload, n);
  if (auto* x = std::get_if<VLam>(&v->node)) return count_holes_t(x->body, n);
  if (auto* x = std::get_if<VFold>(&v->node)) return count_holes_v(x->payload, n);
}

} // namespace

Factorized factorize(const TermPtr& m) {
  std::vector<double> reals;
  TermPtr skel = strip_term(m, reals);
  return {{skel, (int)reals.size()}, std::move(reals)};
}

TermPtr fill(const PreTerm& pre, const std::vector<double>& reals) {
  if ((int)reals.size() != pre.hole_count)
    throw std::runtime_error("fill: expected " + std::to_string(pre.hole_count) + " reals, got " +
                             std::to_string(reals.size()));
  int filled = 0;
  TermPtr out = fill_t(pre.skeleton, reals, filled);
  if (filled != pre.hole_count) throw std::runtime_error("fill: hole count mismatch in skeleton");
  return out;
}

ValuePtr fill_value(const ValuePtr& pre_value, const std::vector<double>& reals) {
  int filled = 0;
  ValuePtr out = fill_v(pre_value, reals, filled);
  if (filled != (int)reals.size())
    throw std::runtime_error("fill_value: hole count mismatch");
  return out;
}

int count_holes(const TermPtr& m) {
  int n = 0;
  count_holes_t(m, n);
  return n;
}

int count_holes_value(const ValuePtr& v) {
  int n = 0;
  count_holes_v(v, n);
  return n;
}

// ---------------------------------------------------------------------------
// derived forms
// ---------------------------------------------------------------------------

namespace sugar {

ValuePtr unit_value() {
  static ValuePtr v = v_lam("u", t_void(), m_val(v_var("u")));
  return v;
}

ValuePtr true_value() {
  static ValuePtr v = v_inj("tt", unit_value(), t_bool());
  return v;
}

ValuePtr false_value() {
  static ValuePtr v = v_inj("ff", unit_value(), t_bool());
  return v;
}

TermPtr if_then_else(const ValuePtr& cond, const TermPtr& then_t, const TermPtr& else_t) {
  std::vector<std::string> used = free_vars(then_t);
  auto fv2 = free_vars(else_t);
  used.insert(used.end(), fv2.begin(), fv2.end());
  std::string z = fresh_name("w", used);
  return m_case(cond, {{"tt", z, then_t}, {"ff", z, else_t}});
}

TermPtr if_term(const TermPtr& cond, const TermPtr& then_t, const TermPtr& else_t) {
  std::vector<std::string> used = free_vars(then_t);
  for (const auto& s : free_vars(else_t)) used.push_back(s);
  for (const auto& s : free_vars(cond)) used.push_back(s);
  std::string b = fresh_name("b", used);
  return m_let(b, cond, if_then_else(v_var(b), then_t, else_t));
}

TermPtr bernoulli(const TermPtr& m, const TermPtr& n, const TermPtr& p) {
  std::vector<std::string> used = free_vars(m);
  for (const auto& s : free_vars(n)) used.push_back(s);
  for (const auto& s : free_vars(p)) used.push_back(s);
  std::string vp = fresh_name("p", used);
  used.push_back(vp);
  std::string vx = fresh_name("x", used);
  return m_let(vp, p,
         m_let(vx, m_sample(),
               if_term(m_primb("lt", {v_var(vx), v_var(vp)}), m, n)));
}

TermPtr normal_std() {
  const double two_pi = 6.283185307179586;
  return m_let("x", m_sample(),
         m_let("y", m_sample(),
         m_let("lx", m_primc("log", {v_var("x")}),
         m_let("sq", m_primc("mul", {v_var("lx"), v_real(-2.0)}),
         m_let("r", m_primc("sqrt", {v_var("sq")}),
         m_let("th", m_primc("mul", {v_var("y"), v_real(two_pi)}),
         m_let("c", m_primc("cos", {v_var("th")}),
               m_primc("mul", {v_var("r"), v_var("c")}))))))));
}

TermPtr normal(const TermPtr& mean, const TermPtr& stddev) {
  std::vector<std::string> used = free_vars(mean);
  for (const auto& s : free_vars(stddev)) used.push_back(s);
  std::string vmu = fresh_name("mu", used);
  used.push_back(vmu);
  std::string vsg = fresh_name("sg", used);
  used.push_back(vsg);
  std::string vz = fresh_name("z", used);
  used.push_back(vz);
  std::string vs = fresh_name("s", used);
  return m_let(vmu, mean,
         m_let(vsg, stddev,
         m_let(vz, normal_std(),
         m_let(vs, m_primc("mul", {v_var(vsg), v_var(vz)}),
               m_primc("add", {v_var(vs), v_var(vmu)})))));
}

TermPtr apply_value_term(const ValuePtr& v, const TermPtr& m) {
  if (auto* x = std::get_if<TVal>(&m->node)) return m_app(v, x->v);
  std::vector<std::string> used = free_vars(m);
  std::set<std::string> fvv;
  {
    std::vector<std::string> bound;
    TermPtr probe = m_val(v);
    for (const auto& s : free_vars(probe)) used.push_back(s);
  }
  std::string x = fresh_name("a", used);
  return m_let(x, m, m_app(v, v_var(x)));
}

TermPtr apply_term_term(const TermPtr& m, const TermPtr& n) {
  if (auto* x = std::get_if<TVal>(&m->node)) return apply_value_term(x->v, n);
  std::vector<std::string> used = free_vars(m);
  for (const auto& s : free_vars(n)) used.push_back(s);
  std::string f = fresh_name("f", used);
  if (auto* y = std::get_if<TVal>(&n->node)) return m_let(f, m, m_app(v_var(f), y->v));
  used.push_back(f);
  std::string a = fresh_name("a", used);
  return m_let(f, m, m_let(a, n, m_app(v_var(f), v_var(a))));
}

TermPtr fix(const std::string& fname, const TypePtr& sigma, const TypePtr& tau,
            const ValuePtr& body) {
  TypePtr fty = t_arrow(sigma, tau);
  // rec = mu a. (a -> (sigma -> tau)); unfolding rec gives rec -> (sigma -> tau)
  std::string a = "a";
  TypePtr rec = t_mu(a, t_arrow(t_var(a), fty));
  std::vector<std::string> used = free_vars(m_val(body));
  used.push_back(fname);
  std::string z = fresh_name("z", used);
  used.push_back(z);
  std::string y = fresh_name("y", used);
  used.push_back(y);
  std::string g = fresh_name("g", used);
  used.push_back(g);
  std::string h = fresh_name("h", used);
  // self = lam y: sigma. let g = unfold z in let h = g z in h y
  ValuePtr self = v_lam(
      y, sigma,
      m_let(g, m_unfold(v_var(z)),
            m_let(h, m_app(v_var(g), v_var(z)), m_app(v_var(h), v_var(y)))));
  // w = lam z: rec. (lam fname: sigma -> tau. body) self
  ValuePtr w = v_lam(z, rec, m_app(v_lam(fname, fty, m_val(body)), self));
  return m_app(w, v_fold(w, rec));
}

TermPtr omega() {
  // d = lam z: mu a. (a -> real). let u = unfold z in u z, applied to fold d
  TypePtr rec = t_mu("a", t_arrow(t_var("a"), t_real()));
  ValuePtr d = v_lam("z", rec, m_let("u", m_unfold(v_var("z")), m_app(v_var("u"), v_var("z"))));
  return m_app(d, v_fold(d, rec));
}

} // namespace sugar

} // namespace lmplambda
