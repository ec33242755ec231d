#include "lmplambda/syntax.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lmplambda {

namespace {

enum class Tok { Ident, Num, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  double num = 0.0;
  int line = 1;
};

struct Lexer {
  std::vector<Token> toks;

  explicit Lexer(const std::string& src) {
    size_t i = 0;
    int line = 1;
    auto push = [&](Tok k, std::string t, double n = 0.0) {
      toks.push_back({k, std::move(t), n, line});
    };
    while (i < src.size()) {
      char c = src[i];
      if (c == '\n') {
        ++line;
        ++i;
        continue;
      }
      if (std::isspace((unsigned char)c)) {
        ++i;
        continue;
      }
      if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
        while (i < src.size() && src[i] != '\n') ++i;
        continue;
      }
      if (c == '-' && i + 1 < src.size() && src[i + 1] == '>') {
        push(Tok::Punct, "->");
        i += 2;
        continue;
      }
      if (c == '=' && i + 1 < src.size() && src[i + 1] == '>') {
        push(Tok::Punct, "=>");
        i += 2;
        continue;
      }
      if (c == '[' && i + 1 < src.size() && src[i + 1] == '.' && i + 2 < src.size() &&
          src[i + 2] == ']') {
        push(Tok::Punct, "[.]");
        i += 3;
        continue;
      }
      if (std::isdigit((unsigned char)c) ||
          (c == '-' && i + 1 < src.size() &&
           (std::isdigit((unsigned char)src[i + 1]) || src[i + 1] == '.'))) {
        size_t j = i;
        if (src[j] == '-') ++j;
        while (j < src.size() && std::isdigit((unsigned char)src[j])) ++j;
        if (j < src.size() && src[j] == '.' && j + 1 < src.size() &&
            std::isdigit((unsigned char)src[j + 1])) {
          ++j;
          while (j < src.size() && std::isdigit((unsigned char)src[j])) ++j;
        }
        if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
          size_t k = j + 1;
          if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
          if (k < src.size() && std::isdigit((unsigned char)src[k])) {
            j = k;
            while (j < src.size() && std::isdigit((unsigned char)src[j])) ++j;
          }
        }
        std::string text = src.substr(i, j - i);
        push(Tok::Num, text, std::strtod(text.c_str(), nullptr));
        i = j;
        continue;
      }
      if (std::isalpha((unsigned char)c) || c == '_') {
        size_t j = i;
        while (j < src.size() && (std::isalnum((unsigned char)src[j]) || src[j] == '_' ||
                                  src[j] == '\''))
          ++j;
        std::string text = src.substr(i, j - i);
        if (text == "inf")
          push(Tok::Num, text, HUGE_VAL);
        else if (text == "nan")
          push(Tok::Num, text, NAN);
        else
          push(Tok::Ident, text);
        i = j;
        continue;
      }
      std::string p(1, c);
      if (p == "(" || p == ")" || p == "{" || p == "}" || p == "," || p == ":" || p == "." ||
          p == "=" || p == "[" || p == "]") {
        push(Tok::Punct, p);
        ++i;
        continue;
      }
      throw ParseError("line " + std::to_string(line) + ": unexpected character '" + p + "'");
    }
    push(Tok::End, "");
  }
};

bool is_keyword(const std::string& s) {
  static const char* kws[] = {"sample", "let",   "in",     "lam",  "case",  "inj",
                              "fold",   "unfold", "if",     "then", "else",  "true",
                              "false",  "bernoulli", "normal_std", "normal", "fix",
                              "mu",     "sum",   "real",   "void", "unit",  "bool"};
  for (const char* k : kws)
    if (s == k) return true;
  return false;
}

struct Parser {
  std::vector<Token> toks;
  size_t pos = 0;

  explicit Parser(const std::string& src) : toks(Lexer(src).toks) {}

  const Token& peek(size_t ahead = 0) const {
    size_t i = pos + ahead;
    return i < toks.size() ? toks[i] : toks.back();
  }
  Token next() { return toks[pos < toks.size() - 1 ? pos++ : pos]; }
  bool at_punct(const std::string& p, size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Punct && peek(ahead).text == p;
  }
  bool at_ident(const std::string& s, size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && peek(ahead).text == s;
  }
  void expect_punct(const std::string& p) {
    if (!at_punct(p)) fail("expected '" + p + "'");
    ++pos;
  }
  std::string expect_ident() {
    if (peek().kind != Tok::Ident) fail("expected identifier");
    if (is_keyword(peek().text)) fail("keyword '" + peek().text + "' used as identifier");
    return next().text;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("line " + std::to_string(peek().line) + ": " + msg + ", found '" +
                     (peek().kind == Tok::End ? "<end>" : peek().text) + "'");
  }

  // -------------------------------------------------------------- types

  TypePtr parse_type_atom() {
    if (at_ident("real")) {
      ++pos;
      return t_real();
    }
    if (at_ident("void")) {
      ++pos;
      return t_void();
    }
    if (at_ident("unit")) {
      ++pos;
      return t_unit();
    }
    if (at_ident("bool")) {
      ++pos;
      return t_bool();
    }
    if (at_ident("sum")) {
      ++pos;
      expect_punct("{");
      std::vector<std::pair<std::string, TypePtr>> vs;
      if (!at_punct("}")) {
        while (true) {
          std::string tag = expect_ident();
          expect_punct(":");
          vs.emplace_back(tag, parse_type());
          if (at_punct(",")) {
            ++pos;
            continue;
          }
          break;
        }
      }
      expect_punct("}");
      return t_sum(std::move(vs));
    }
    if (at_ident("mu")) {
      ++pos;
      std::string v = expect_ident();
      expect_punct(".");
      return t_mu(v, parse_type());
    }
    if (at_punct("(")) {
      ++pos;
      TypePtr t = parse_type();
      expect_punct(")");
      return t;
    }
    if (peek().kind == Tok::Ident && !is_keyword(peek().text)) return t_var(next().text);
    fail("expected type");
  }

  TypePtr parse_type() {
    TypePtr t = parse_type_atom();
    if (at_punct("->")) {
      ++pos;
      return t_arrow(t, parse_type());
    }
    return t;
  }

  // -------------------------------------------------------------- values

  ValuePtr parse_value() {
    if (peek().kind == Tok::Num) return v_real(next().num);
    if (at_ident("true")) {
      ++pos;
      return sugar::true_value();
    }
    if (at_ident("false")) {
      ++pos;
      return sugar::false_value();
    }
    if (at_ident("lam")) return parse_lambda();
    if (at_ident("inj")) {
      ++pos;
      std::string tag = expect_ident();
      return v_inj(tag, parse_value());
    }
    if (at_ident("fold")) {
      ++pos;
      return v_fold(parse_value());
    }
    if (at_punct("[")) {
      ++pos;
      if (peek().kind != Tok::Num) fail("expected hole index");
      int idx = (int)next().num;
      expect_punct("]");
      return v_hole(idx);
    }
    if (at_punct("(")) {
      ++pos;
      TermPtr inner = parse_term();
      ValuePtr v = term_as_value(inner);
      if (at_punct(":")) {
        ++pos;
        TypePtr ann = parse_type();
        v = ascribe(v, ann);
      }
      expect_punct(")");
      return v;
    }
    if (peek().kind == Tok::Ident && !is_keyword(peek().text)) return v_var(next().text);
    fail("expected value");
  }

  ValuePtr term_as_value(const TermPtr& m) {
    if (auto* x = std::get_if<TVal>(&m->node)) return x->v;
    fail("expected a value, found a computation");
  }

  static ValuePtr ascribe(const ValuePtr& v, const TypePtr& ann) {
    if (auto* x = std::get_if<VInj>(&v->node)) return v_inj(x->tag, x->payload, ann);
    if (auto* x = std::get_if<VFold>(&v->node)) return v_fold(x->payload, ann);
    throw ParseError("type ascription only applies to inj and fold values");
  }

  ValuePtr parse_lambda() {
    ++pos; // lam
    std::string v = expect_ident();
    expect_punct(":");
    TypePtr ty = parse_type();
    expect_punct(".");
    return v_lam(v, ty, parse_term());
  }

  // -------------------------------------------------------------- terms

  bool at_prim_call(size_t ahead = 0) const {
    if (peek(ahead).kind != Tok::Ident) return false;
    if (!at_punct("(", ahead + 1)) return false;
    const std::string& s = peek(ahead).text;
    return prim_lookup(s) != nullptr || bool_test_known(s);
  }

  bool starts_arg() const {
    if (peek().kind == Tok::Num) return true;
    if (at_punct("(") || at_punct("[.]") || at_punct("[")) return true;
    if (peek().kind != Tok::Ident) return false;
    const std::string& s = peek().text;
    if (s == "true" || s == "false") return true;
    if (at_prim_call()) return true;
    if (is_keyword(s)) return false;
    // stop before the next case branch: tag ident =>
    if (peek(1).kind == Tok::Ident && peek(2).kind == Tok::Punct && peek(2).text == "=>")
      return false;
    return true;
  }

  TermPtr parse_term_atom() {
    if (at_ident("sample")) {
      ++pos;
      return m_sample();
    }
    if (at_ident("let")) {
      ++pos;
      std::string v = expect_ident();
      expect_punct("=");
      TermPtr bound = parse_term();
      if (!at_ident("in")) fail("expected 'in'");
      ++pos;
      return m_let(v, bound, parse_term());
    }
    if (at_ident("lam")) return m_val(parse_lambda());
    if (at_ident("case")) {
      ++pos;
      ValuePtr scrut = parse_value();
      expect_punct("{");
      std::vector<CaseBranch> brs;
      while (!at_punct("}")) {
        std::string tag = expect_ident();
        std::string var = expect_ident();
        expect_punct("=>");
        brs.push_back({tag, var, parse_term()});
        if (at_punct(",") || at_punct(";")) ++pos;
      }
      expect_punct("}");
      if (brs.empty()) fail("case needs at least one branch");
      return m_case(std::move(scrut), std::move(brs));
    }
    if (at_ident("inj")) {
      ++pos;
      std::string tag = expect_ident();
      return m_val(v_inj(tag, parse_value()));
    }
    if (at_ident("fold")) {
      ++pos;
      return m_val(v_fold(parse_value()));
    }
    if (at_ident("unfold")) {
      ++pos;
      return m_unfold(parse_value());
    }
    if (at_ident("if")) {
      ++pos;
      TermPtr c = parse_term();
      if (!at_ident("then")) fail("expected 'then'");
      ++pos;
      TermPtr t = parse_term();
      if (!at_ident("else")) fail("expected 'else'");
      ++pos;
      TermPtr e = parse_term();
      if (auto* x = std::get_if<TVal>(&c->node)) return sugar::if_then_else(x->v, t, e);
      return sugar::if_term(c, t, e);
    }
    if (at_ident("bernoulli")) {
      ++pos;
      expect_punct("(");
      TermPtr m = parse_term();
      expect_punct(",");
      TermPtr n = parse_term();
      expect_punct(",");
      TermPtr p = parse_term();
      expect_punct(")");
      return sugar::bernoulli(m, n, p);
    }
    if (at_ident("normal_std")) {
      ++pos;
      return sugar::normal_std();
    }
    if (at_ident("normal")) {
      ++pos;
      expect_punct("(");
      TermPtr m = parse_term();
      expect_punct(",");
      TermPtr s = parse_term();
      expect_punct(")");
      return sugar::normal(m, s);
    }
    if (at_ident("fix")) {
      ++pos;
      std::string f = expect_ident();
      expect_punct(":");
      TypePtr ty = parse_type();
      expect_punct(".");
      TermPtr body = parse_term();
      auto* arr = std::get_if<TArrow>(&ty->node);
      if (!arr) fail("fix needs an arrow type annotation");
      auto* val = std::get_if<TVal>(&body->node);
      if (!val || !std::holds_alternative<VLam>(val->v->node))
        fail("fix body must be a lambda");
      return sugar::fix(f, arr->from, arr->to, val->v);
    }
    if (at_punct("[.]")) {
      ++pos;
      return m_ctx_hole();
    }
    if (at_prim_call()) {
      std::string name = next().text;
      ++pos; // (
      std::vector<ValuePtr> args;
      if (!at_punct(")")) {
        while (true) {
          args.push_back(parse_value());
          if (at_punct(",")) {
            ++pos;
            continue;
          }
          break;
        }
      }
      expect_punct(")");
      if (bool_test_known(name)) return m_primb(name, std::move(args));
      return m_primc(name, std::move(args));
    }
    if (peek().kind == Tok::Num || at_punct("[") ||
        (peek().kind == Tok::Ident && !is_keyword(peek().text)) || at_ident("true") ||
        at_ident("false"))
      return m_val(parse_value());
    if (at_punct("(")) {
      ++pos;
      TermPtr inner = parse_term();
      if (at_punct(":")) {
        ++pos;
        TypePtr ann = parse_type();
        inner = m_val(ascribe(term_as_value(inner), ann));
      }
      expect_punct(")");
      return inner;
    }
    fail("expected term");
  }

  TermPtr parse_term() {
    TermPtr t = parse_term_atom();
    while (starts_arg()) {
      if (at_punct("[.]")) {
        ++pos;
        t = sugar::apply_term_term(t, m_ctx_hole());
        continue;
      }
      TermPtr arg;
      if (at_prim_call()) {
        arg = parse_term_atom();
        t = sugar::apply_term_term(t, arg);
        continue;
      }
      if (at_punct("(")) {
        ++pos;
        arg = parse_term();
        if (at_punct(":")) {
          ++pos;
          TypePtr ann = parse_type();
          arg = m_val(ascribe(term_as_value(arg), ann));
        }
        expect_punct(")");
      } else {
        arg = m_val(parse_value());
      }
      t = sugar::apply_term_term(t, arg);
    }
    return t;
  }
};

} // namespace

TermPtr parse_term(const std::string& src) {
  Parser p(src);
  TermPtr t = p.parse_term();
  if (p.peek().kind != Tok::End) p.fail("trailing input");
  return t;
}

TypePtr parse_type(const std::string& src) {
  Parser p(src);
  TypePtr t = p.parse_type();
  if (p.peek().kind != Tok::End) p.fail("trailing input");
  return t;
}

TermPtr parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_term(ss.str());
}

} // namespace lmplambda
