#include "lmplambda/generators.hpp"

#include <array>

namespace lmplambda {

namespace {

size_t pick(RngStream& rng, size_t n) { return (size_t)(rng.next_u64() % (uint64_t)n); }

const std::array<double, 7> kLiterals = {0.0, 0.25, 0.5, 1.0, 2.0, -1.0, 3.0};

struct PrimPick {
  const char* name;
  int arity;
};

const std::array<PrimPick, 12> kPrims = {{{"add", 2},
                                          {"sub", 2},
                                          {"mul", 2},
                                          {"neg", 1},
                                          {"min", 2},
                                          {"max", 2},
                                          {"id", 1},
                                          {"abs", 1},
                                          {"clamp", 3},
                                          {"op_le", 2},
                                          {"sin", 1},
                                          {"cos", 1}}};

ValuePtr gen_value(RngStream& rng, const std::vector<std::string>& env) {
  if (!env.empty() && pick(rng, 2) == 0) return v_var(env[pick(rng, env.size())]);
  return v_real(kLiterals[pick(rng, kLiterals.size())]);
}

TermPtr gen_term(RngStream& rng, std::vector<std::string> env, int depth) {
  if (depth <= 0) {
    switch (pick(rng, env.empty() ? 2 : 3)) {
      case 0: return m_val(v_real(kLiterals[pick(rng, kLiterals.size())]));
      case 1: return m_sample();
      default: return m_val(v_var(env[pick(rng, env.size())]));
    }
  }
  switch (pick(rng, 6)) {
    case 0:
      return gen_term(rng, env, 0);
    case 1: {
      std::string x = "x" + std::to_string(env.size());
      TermPtr bound = gen_term(rng, env, depth - 1);
      env.push_back(x);
      return m_let(x, bound, gen_term(rng, env, depth - 1));
    }
    case 2: {
      const PrimPick& p = kPrims[pick(rng, kPrims.size())];
      std::vector<ValuePtr> args;
      for (int i = 0; i < p.arity; ++i) args.push_back(gen_value(rng, env));
      return m_primc(p.name, std::move(args));
    }
    case 3: {
      std::string x = "x" + std::to_string(env.size());
      ValuePtr arg = gen_value(rng, env);
      env.push_back(x);
      TermPtr body = gen_term(rng, env, depth - 1);
      return m_app(v_lam(x, t_real(), body), arg);
    }
    case 4: {
      ValuePtr cond = pick(rng, 2) == 0 ? sugar::true_value() : sugar::false_value();
      return sugar::if_then_else(cond, gen_term(rng, env, depth - 1),
                                 gen_term(rng, env, depth - 1));
    }
    default:
      return m_unfold(v_fold(gen_value(rng, env), t_mu("a", t_real())));
  }
}

} // namespace

TermPtr random_continuous_program(RngStream& rng, int max_depth) {
  return gen_term(rng, {}, max_depth);
}

FiniteLMP random_finite_lmp(RngStream& rng, int max_states, int max_labels) {
  FiniteLMP l;
  size_t n = 2 + pick(rng, (size_t)std::max(1, max_states - 1));
  size_t labels = 1 + pick(rng, (size_t)std::max(1, max_labels));
  for (size_t i = 0; i < n; ++i) l.states.push_back("s" + std::to_string(i));
  for (size_t a = 0; a < labels; ++a) l.labels.push_back("a" + std::to_string(a));
  for (const auto& lab : l.labels) {
    std::vector<std::vector<double>> mat(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) {
      if (pick(rng, 4) == 0) continue;
      size_t eighths = 1 + pick(rng, 8);
      size_t first = 1 + pick(rng, eighths);
      mat[i][pick(rng, n)] += (double)first / 8.0;
      if (eighths > first) mat[i][pick(rng, n)] += (double)(eighths - first) / 8.0;
    }
    l.kernels[lab] = std::move(mat);
  }
  l.validate();
  return l;
}

} // namespace lmplambda
