#include "lmplambda/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace lmplambda {

// ---------------------------------------------------------------------------
// formulas
// ---------------------------------------------------------------------------

FormulaPtr f_top() { return std::make_shared<Formula>(Formula{FTop{}}); }
FormulaPtr f_and(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<Formula>(Formula{FAnd{std::move(a), std::move(b)}});
}
FormulaPtr f_diamond(const std::string& label, Rational q, FormulaPtr body) {
  return std::make_shared<Formula>(Formula{FDiamond{label, q, std::move(body)}});
}

std::string print_formula(const FormulaPtr& f) {
  if (std::holds_alternative<FTop>(f->node)) return "T";
  if (auto* x = std::get_if<FAnd>(&f->node))
    return "(" + print_formula(x->a) + " & " + print_formula(x->b) + ")";
  const auto& d = std::get<FDiamond>(f->node);
  return "<" + d.label + ">_" + d.q.print() + " " + print_formula(d.body);
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

TestPtr t_omega() { return std::make_shared<Test>(Test{TOmega{}}); }
TestPtr t_conj(TestPtr a, TestPtr b) {
  return std::make_shared<Test>(Test{TConj{std::move(a), std::move(b)}});
}
TestPtr t_act(const std::string& label, TestPtr rest) {
  return std::make_shared<Test>(Test{TAct{label, std::move(rest)}});
}

std::string print_test(const TestPtr& t) {
  if (std::holds_alternative<TOmega>(t->node)) return "w";
  if (auto* x = std::get_if<TConj>(&t->node))
    return "(" + print_test(x->a) + " & " + print_test(x->b) + ")";
  const auto& a = std::get<TAct>(t->node);
  return a.label + "." + print_test(a.rest);
}

int test_size(const TestPtr& t) {
  if (std::holds_alternative<TOmega>(t->node)) return 0;
  if (auto* x = std::get_if<TConj>(&t->node)) return 1 + test_size(x->a) + test_size(x->b);
  return 1 + test_size(std::get<TAct>(t->node).rest);
}

namespace {

struct TestParser {
  const std::string& s;
  size_t pos = 0;

  void ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }

  [[noreturn]] void fail(const std::string& why) {
    throw std::runtime_error("test: " + why + " at offset " + std::to_string(pos));
  }

  TestPtr parse() {
    ws();
    if (pos >= s.size()) fail("unexpected end");
    if (s[pos] == '(') {
      ++pos;
      TestPtr a = parse();
      ws();
      if (pos >= s.size() || s[pos] != '&') fail("expected &");
      ++pos;
      TestPtr b = parse();
      ws();
      if (pos >= s.size() || s[pos] != ')') fail("expected )");
      ++pos;
      return t_conj(std::move(a), std::move(b));
    }
    // a label runs to the first dot outside braces; a lone w is omega
    size_t start = pos;
    int depth = 0;
    while (pos < s.size()) {
      char c = s[pos];
      if (c == '{') ++depth;
      if (c == '}') --depth;
      if (depth == 0 && (c == '.' || c == '&' || c == ')')) break;
      ++pos;
    }
    std::string tok = s.substr(start, pos - start);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.pop_back();
    if (tok == "w") return t_omega();
    if (pos >= s.size() || s[pos] != '.') fail("label '" + tok + "' must be followed by a dot");
    ++pos;
    return t_act(tok, parse());
  }
};

} // namespace

TestPtr parse_test(const std::string& text) {
  TestParser p{text};
  TestPtr t = p.parse();
  p.ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return t;
}

// ---------------------------------------------------------------------------
// finite-LMP algorithms
// ---------------------------------------------------------------------------

namespace {

long long quantize(double x) { return llround(x * 1e9); }

EquivRelation partition_from_ids(const FiniteLMP& l, const std::vector<int>& ids) {
  EquivRelation r;
  r.carrier = l.states;
  r.block_id = ids;
  return r;
}

std::vector<std::vector<int>> blocks_of(const std::vector<int>& ids) {
  std::map<int, std::vector<int>> by;
  for (size_t i = 0; i < ids.size(); ++i) by[ids[i]].push_back((int)i);
  std::vector<std::vector<int>> out;
  for (auto& [id, blk] : by) out.push_back(std::move(blk));
  return out;
}

} // namespace

EquivRelation state_bisim_finite(const FiniteLMP& l) {
  l.validate();
  size_t n = l.states.size();
  std::vector<int> ids(n, 0);
  for (;;) {
    auto blocks = blocks_of(ids);
    // signature: previous block, then per label the quantized block masses
    std::map<std::vector<long long>, int> sig_ids;
    std::vector<int> next(n, 0);
    for (size_t s = 0; s < n; ++s) {
      std::vector<long long> sig{ids[s]};
      for (const auto& lab : l.labels) {
        const auto& mat = l.kernel(lab);
        for (const auto& blk : blocks) {
          double mass = 0;
          for (int t : blk) mass += mat[s][t];
          sig.push_back(quantize(mass));
        }
      }
      auto [it, fresh] = sig_ids.emplace(std::move(sig), (int)sig_ids.size());
      next[s] = it->second;
    }
    if (next == ids) return partition_from_ids(l, ids);
    ids = next;
  }
}

bool is_bisimulation(const FiniteLMP& l, const EquivRelation& r) {
  if (r.carrier != l.states) throw std::runtime_error("is_bisimulation: carrier mismatch");
  auto blocks = r.blocks();
  size_t n = l.states.size();
  for (size_t s = 0; s < n; ++s)
    for (size_t t = s + 1; t < n; ++t) {
      if (!r.related((int)s, (int)t)) continue;
      for (const auto& lab : l.labels) {
        const auto& mat = l.kernel(lab);
        for (const auto& blk : blocks) {
          double ms = 0, mt = 0;
          for (int u : blk) {
            ms += mat[s][u];
            mt += mat[t][u];
          }
          if (std::fabs(ms - mt) > 1e-9) return false;
        }
      }
    }
  return true;
}

bool logic_sat_finite(const FiniteLMP& l, const std::string& state, const FormulaPtr& phi) {
  int s = l.state_index(state);
  if (std::holds_alternative<FTop>(phi->node)) return true;
  if (auto* x = std::get_if<FAnd>(&phi->node))
    return logic_sat_finite(l, state, x->a) && logic_sat_finite(l, state, x->b);
  const auto& d = std::get<FDiamond>(phi->node);
  const auto& mat = l.kernel(d.label);
  double mass = 0;
  for (size_t t = 0; t < l.states.size(); ++t)
    if (logic_sat_finite(l, l.states[t], d.body)) mass += mat[s][t];
  return mass > d.q.value();
}

std::vector<Rational> dyadic_rationals(int j) {
  long long den = 1ll << j;
  std::vector<Rational> out;
  for (long long k = 0; k <= den; ++k) out.push_back(Rational(k, den));
  return out;
}

EquivRelation logical_equiv_finite(const FiniteLMP& l, int depth,
                                   const std::vector<Rational>& grid) {
  l.validate();
  size_t n = l.states.size();
  if (n > 25) throw std::runtime_error("logical_equiv_finite: carrier too large");
  uint32_t full = (n == 32) ? 0xffffffffu : ((1u << n) - 1);

  auto close_under_intersection = [](std::set<uint32_t>& sets) {
    std::vector<uint32_t> work(sets.begin(), sets.end());
    while (!work.empty()) {
      uint32_t a = work.back();
      work.pop_back();
      std::vector<uint32_t> fresh;
      for (uint32_t b : sets) {
        uint32_t c = a & b;
        if (!sets.count(c)) fresh.push_back(c);
      }
      for (uint32_t c : fresh)
        if (sets.insert(c).second) work.push_back(c);
    }
  };

  std::set<uint32_t> sets{full};
  for (int round = 0; round < depth; ++round) {
    std::set<uint32_t> cand = sets;
    for (uint32_t A : sets) {
      for (const auto& lab : l.labels) {
        const auto& mat = l.kernel(lab);
        std::vector<double> mass(n, 0.0);
        for (size_t s = 0; s < n; ++s)
          for (size_t t = 0; t < n; ++t)
            if (A & (1u << t)) mass[s] += mat[s][t];
        if (!grid.empty()) {
          for (const auto& q : grid) {
            uint32_t B = 0;
            for (size_t s = 0; s < n; ++s)
              if (mass[s] > q.value()) B |= (1u << s);
            cand.insert(B);
          }
        } else {
          // thresholds at the observed mass levels split every splittable pair
          std::set<long long> levels;
          for (size_t s = 0; s < n; ++s) levels.insert(quantize(mass[s]));
          for (long long lev : levels) {
            uint32_t B = 0;
            for (size_t s = 0; s < n; ++s)
              if (quantize(mass[s]) > lev) B |= (1u << s);
            cand.insert(B);
          }
        }
      }
    }
    close_under_intersection(cand);
    if (cand == sets) break;
    sets = std::move(cand);
  }

  std::map<std::vector<char>, int> profile_ids;
  std::vector<int> ids(n, 0);
  for (size_t s = 0; s < n; ++s) {
    std::vector<char> prof;
    for (uint32_t A : sets) prof.push_back((A >> s) & 1);
    auto [it, fresh] = profile_ids.emplace(std::move(prof), (int)profile_ids.size());
    ids[s] = it->second;
  }
  return partition_from_ids(l, ids);
}

double test_success_finite(const FiniteLMP& l, const std::string& state, const TestPtr& t) {
  int s = l.state_index(state);
  if (std::holds_alternative<TOmega>(t->node)) return 1.0;
  if (auto* x = std::get_if<TConj>(&t->node))
    return test_success_finite(l, state, x->a) * test_success_finite(l, state, x->b);
  const auto& a = std::get<TAct>(t->node);
  const auto& mat = l.kernel(a.label);
  double sum = 0;
  for (size_t u = 0; u < l.states.size(); ++u)
    if (mat[s][u] > 0) sum += mat[s][u] * test_success_finite(l, l.states[u], a.rest);
  return sum;
}

// Success vectors: omega is the all-ones vector, a.t applies the label kernel,
// (t & t') multiplies pointwise. Two states agreeing on u and v agree on u*v,
// so conjunction only separates states after a further label prefix. The span
// of the product closure of the family is exactly the block-constant vectors
// for the current agreement partition, so each round it is enough to prefix a
// rank-complete basis of genuine test vectors instead of every product.
EquivRelation test_equiv_finite(const FiniteLMP& l, int depth) {
  l.validate();
  size_t n = l.states.size();

  std::vector<std::vector<double>> vecs;
  std::set<std::vector<long long>> seen;
  auto add = [&](const std::vector<double>& v) -> bool {
    std::vector<long long> key(n);
    for (size_t i = 0; i < n; ++i) key[i] = quantize(v[i]);
    if (!seen.insert(std::move(key)).second) return false;
    vecs.push_back(v);
    return true;
  };
  add(std::vector<double>(n, 1.0));

  auto partition_ids = [&]() {
    std::map<std::vector<long long>, int> prof_ids;
    std::vector<int> ids(n, 0);
    for (size_t s = 0; s < n; ++s) {
      std::vector<long long> prof;
      prof.reserve(vecs.size());
      for (const auto& v : vecs) prof.push_back(quantize(v[s]));
      auto [it, fresh] = prof_ids.emplace(std::move(prof), (int)prof_ids.size());
      ids[s] = it->second;
    }
    return ids;
  };

  for (int round = 0; round < depth; ++round) {
    std::vector<int> ids = partition_ids();
    int nblocks = 1 + *std::max_element(ids.begin(), ids.end());
    std::vector<size_t> rep(nblocks);
    for (size_t s = 0; s < n; ++s) rep[ids[s]] = s;

    // greedy basis over block-collapsed coordinates
    std::vector<std::vector<double>> rows;
    std::vector<int> pivots;
    std::vector<size_t> basis;
    auto try_rank = [&](size_t idx) -> bool {
      std::vector<double> r(nblocks);
      for (int b = 0; b < nblocks; ++b) r[b] = vecs[idx][rep[b]];
      for (size_t j = 0; j < rows.size(); ++j) {
        double f = r[pivots[j]] / rows[j][pivots[j]];
        if (f != 0.0)
          for (int c = 0; c < nblocks; ++c) r[c] -= f * rows[j][c];
      }
      int piv = 0;
      for (int c = 1; c < nblocks; ++c)
        if (std::fabs(r[c]) > std::fabs(r[piv])) piv = c;
      if (std::fabs(r[piv]) <= 1e-9) return false;
      rows.push_back(std::move(r));
      pivots.push_back(piv);
      basis.push_back(idx);
      return true;
    };
    for (size_t i = 0; i < vecs.size() && (int)basis.size() < nblocks; ++i) try_rank(i);

    // conjunctions fill out the remaining rank
    while ((int)basis.size() < nblocks) {
      bool progress = false;
      size_t have = vecs.size();
      for (size_t i = 0; i < have && (int)basis.size() < nblocks; ++i)
        for (size_t j = i; j < have && (int)basis.size() < nblocks; ++j) {
          std::vector<double> p(n);
          for (size_t u = 0; u < n; ++u) p[u] = vecs[i][u] * vecs[j][u];
          if (add(p) && try_rank(vecs.size() - 1)) progress = true;
        }
      if (!progress) break;
    }

    bool grew = false;
    for (size_t idx : basis)
      for (const auto& lab : l.labels) {
        const auto& mat = l.kernel(lab);
        std::vector<double> w(n, 0.0);
        for (size_t s = 0; s < n; ++s)
          for (size_t u = 0; u < n; ++u) w[s] += mat[s][u] * vecs[idx][u];
        grew = add(w) || grew;
      }
    if (!grew) break;
  }

  return partition_from_ids(l, partition_ids());
}

} // namespace lmplambda
