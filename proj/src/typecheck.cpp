#include "lmplambda/syntax.hpp"

namespace lmplambda {

namespace {

struct Checker {
  LanguageMode mode;

  [[noreturn]] void fail(const std::string& msg) { throw TypeError(msg); }

  void require(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
  }

  TypePtr synth_value(const Environment& env, const ValuePtr& v) {
    if (auto* x = std::get_if<VVar>(&v->node)) {
      auto t = env.lookup(x->name);
      if (!t) fail("unbound variable: " + x->name);
      return *t;
    }
    if (std::holds_alternative<VReal>(v->node)) return t_real();
    if (auto* x = std::get_if<VInj>(&v->node)) {
      if (!x->ann) fail("cannot infer sum type of inj " + x->tag + "; add an ascription");
      check_value(env, v, x->ann);
      return x->ann;
    }
    if (auto* x = std::get_if<VLam>(&v->node)) {
      require(type_closed(x->ty), "open type annotation on lam " + x->var);
      TypePtr body = synth_term(env.extend(x->var, x->ty), x->body);
      return t_arrow(x->ty, body);
    }
    if (auto* x = std::get_if<VFold>(&v->node)) {
      if (!x->ann) fail("cannot infer recursive type of fold; add an ascription");
      check_value(env, v, x->ann);
      return x->ann;
    }
    fail("a hole has no type; fill the pre-term first");
  }

  void check_value(const Environment& env, const ValuePtr& v, const TypePtr& expect) {
    if (auto* x = std::get_if<VInj>(&v->node)) {
      if (x->ann && !type_equal(x->ann, expect))
        fail("inj ascription " + print_type(x->ann) + " does not match expected " +
             print_type(expect));
      auto* s = std::get_if<TSum>(&expect->node);
      if (!s) fail("inj " + x->tag + " used at non-sum type " + print_type(expect));
      for (const auto& [tag, ty] : s->variants) {
        if (tag == x->tag) {
          check_value(env, x->payload, ty);
          return;
        }
      }
      fail("tag " + x->tag + " is not part of " + print_type(expect));
    }
    if (auto* x = std::get_if<VFold>(&v->node)) {
      if (x->ann && !type_equal(x->ann, expect))
        fail("fold ascription " + print_type(x->ann) + " does not match expected " +
             print_type(expect));
      auto* m = std::get_if<TMu>(&expect->node);
      if (!m) fail("fold used at non-recursive type " + print_type(expect));
      check_value(env, x->payload, type_subst(m->body, m->var, expect));
      return;
    }
    TypePtr got = synth_value(env, v);
    if (!type_equal(got, expect))
      fail("expected " + print_type(expect) + ", got " + print_type(got));
  }

  TypePtr synth_term(const Environment& env, const TermPtr& m) {
    if (auto* x = std::get_if<TVal>(&m->node)) return synth_value(env, x->v);
    if (std::holds_alternative<TSample>(m->node)) return t_real();
    if (auto* x = std::get_if<TPrimC>(&m->node)) {
      const PrimEntry* e = prim_lookup(x->name);
      if (!e) fail("unknown primitive: " + x->name);
      if (!prim_admissible(x->name, mode))
        fail("primitive " + x->name + " is not admissible in continuous mode");
      require((int)x->args.size() == e->arity,
              x->name + " expects " + std::to_string(e->arity) + " arguments");
      for (const auto& a : x->args) check_value(env, a, t_real());
      return t_real();
    }
    if (auto* x = std::get_if<TPrimB>(&m->node)) {
      if (mode == LanguageMode::Continuous)
        fail("boolean test " + x->name + " is not admissible in continuous mode");
      require(bool_test_known(x->name), "unknown boolean test: " + x->name);
      require(x->args.size() == 2, x->name + " expects 2 arguments");
      for (const auto& a : x->args) check_value(env, a, t_real());
      return t_bool();
    }
    if (auto* x = std::get_if<TCase>(&m->node)) {
      TypePtr st = synth_value(env, x->scrutinee);
      auto* s = std::get_if<TSum>(&st->node);
      if (!s) fail("case scrutinee has non-sum type " + print_type(st));
      require(x->branches.size() == s->variants.size(),
              "case must cover every tag of " + print_type(st) + " exactly once");
      TypePtr out;
      for (const auto& [tag, payload_ty] : s->variants) {
        const CaseBranch* br = nullptr;
        for (const auto& b : x->branches)
          if (b.tag == tag) {
            require(br == nullptr, "duplicate case branch for tag " + tag);
            br = &b;
          }
        require(br != nullptr, "missing case branch for tag " + tag);
        Environment e2 = env.extend(br->var, payload_ty);
        if (!out) {
          out = synth_term(e2, br->body);
        } else {
          check_term_in(e2, br->body, out);
        }
      }
      return out;
    }
    if (auto* x = std::get_if<TApp>(&m->node)) {
      TypePtr ft = synth_value(env, x->fn);
      auto* a = std::get_if<TArrow>(&ft->node);
      if (!a) fail("application head has non-arrow type " + print_type(ft));
      check_value(env, x->arg, a->from);
      return a->to;
    }
    if (auto* x = std::get_if<TLet>(&m->node)) {
      TypePtr bt = synth_term(env, x->bound);
      return synth_term(env.extend(x->var, bt), x->body);
    }
    if (auto* x = std::get_if<TUnfold>(&m->node)) {
      TypePtr vt = synth_value(env, x->v);
      auto* mu = std::get_if<TMu>(&vt->node);
      if (!mu) fail("unfold applied to non-recursive type " + print_type(vt));
      return type_subst(mu->body, mu->var, vt);
    }
    fail("context hole [.] inside a program; graft it first");
  }

  void check_term_in(const Environment& env, const TermPtr& m, const TypePtr& expect) {
    if (auto* x = std::get_if<TVal>(&m->node)) {
      check_value(env, x->v, expect);
      return;
    }
    TypePtr got = synth_term(env, m);
    if (!type_equal(got, expect))
      fail("expected " + print_type(expect) + ", got " + print_type(got));
  }
};

} // namespace

TypePtr typecheck(const Environment& env, const TermPtr& m, LanguageMode mode) {
  Checker c{mode};
  return c.synth_term(env, m);
}

TypePtr typecheck_value(const Environment& env, const ValuePtr& v, LanguageMode mode) {
  Checker c{mode};
  return c.synth_value(env, v);
}

void check_term(const Environment& env, const TermPtr& m, const TypePtr& expect,
                LanguageMode mode) {
  Checker c{mode};
  c.check_term_in(env, m, expect);
}

} // namespace lmplambda
