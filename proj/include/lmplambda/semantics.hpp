#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmplambda/rng.hpp"
#include "lmplambda/syntax.hpp"

namespace lmplambda {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Sampling evaluator. Fuel counts rule applications; fuel 0 never converges.
// ---------------------------------------------------------------------------

struct EvalOutcome {
  bool converged = false;
  ValuePtr value;
};

// Uniform draw source; the grid oracle substitutes a fixed list of draws.
struct DrawSource {
  virtual ~DrawSource() = default;
  virtual double draw() = 0;
};

struct RngDraws final : DrawSource {
  RngStream* rng;
  explicit RngDraws(RngStream& s) : rng(&s) {}
  double draw() override { return rng->uniform(); }
};

// Thrown by ListDraws when the prefix is exhausted.
struct NeedMoreDraws {};

struct ListDraws final : DrawSource {
  const std::vector<double>* vals;
  size_t pos = 0;
  explicit ListDraws(const std::vector<double>& v) : vals(&v) {}
  double draw() override {
    if (pos >= vals->size()) throw NeedMoreDraws{};
    return (*vals)[pos++];
  }
};

EvalOutcome eval_sample(const TermPtr& m, long fuel, RngStream& rng);
EvalOutcome eval_with_draws(const TermPtr& m, long fuel, DrawSource& src);

// ---------------------------------------------------------------------------
// Empirical measures from repeated runs
// ---------------------------------------------------------------------------

struct EmpiricalMeasure {
  TypePtr type;
  uint64_t seed = 0;
  size_t samples = 0;
  long fuel = 0;
  std::vector<ValuePtr> converged; // in sample-index order

  double mass() const { return samples ? (double)converged.size() / (double)samples : 0.0; }
  std::vector<double> reals() const;                    // requires real-typed values
  double atom_weight(const ValuePtr& v) const;          // exact-equality mass
  std::vector<double> reals_excluding(const std::vector<double>& atoms) const;
  std::vector<std::pair<std::string, double>> atoms(size_t min_count = 2) const;
};

// One independent stream per sample index; results do not depend on workers.
EmpiricalMeasure estimate(const TermPtr& program, size_t samples, long fuel, uint64_t seed,
                          uint64_t stream = 0, unsigned workers = 0);

Json measure_report(const EmpiricalMeasure& m, size_t real_cap = 1000);

// ---------------------------------------------------------------------------
// Deterministic midpoint-grid quadrature; every path may consume at most
// max_draws draws, each discretized into grid_points midpoint cells.
// ---------------------------------------------------------------------------

struct WeightedValue {
  ValuePtr value;
  double weight;
};

struct DiscreteMeasure {
  std::vector<WeightedValue> atoms; // distinct values, sorted by print
  double mass() const;
  double atom_weight(const ValuePtr& v) const;
};

DiscreteMeasure exact_eval_grid(const TermPtr& program, long fuel, int grid_points,
                                int max_draws = 4);

// total variation distance, matching atoms by printed value
double tv_distance(const DiscreteMeasure& a, const DiscreteMeasure& b);

// ---------------------------------------------------------------------------
// Real kernels
// ---------------------------------------------------------------------------

struct RealKernel;
using KernelPtr = std::shared_ptr<const RealKernel>;

struct KIdentity { int dim; };
struct KLebesgue {};
struct KPrimLift { std::string name; };
struct KReindex { std::vector<int> select; int in_dim; }; // out[j] = in[select[j]]
struct KProduct { KernelPtr left; KernelPtr right; };
struct KCompose { KernelPtr after; KernelPtr before; };

struct RealKernel {
  std::variant<KIdentity, KLebesgue, KPrimLift, KReindex, KProduct, KCompose> node;
};

KernelPtr k_identity(int dim);
KernelPtr k_lebesgue();
KernelPtr k_prim(const std::string& name);
KernelPtr k_reindex(std::vector<int> select, int in_dim);
KernelPtr k_product(KernelPtr left, KernelPtr right);
KernelPtr k_compose(KernelPtr after, KernelPtr before);

int kernel_in_dim(const KernelPtr& k);
int kernel_out_dim(const KernelPtr& k);
int kernel_draw_count(const KernelPtr& k);
std::string kernel_signature(const KernelPtr& k);
std::vector<double> kernel_sample(const KernelPtr& k, const std::vector<double>& in,
                                  RngStream& rng);
std::vector<double> kernel_apply_draws(const KernelPtr& k, const std::vector<double>& in,
                                       const std::vector<double>& draws, size_t& pos);

// ---------------------------------------------------------------------------
// Modular semantics over pre-terms
// ---------------------------------------------------------------------------

struct ModularEntry {
  ValuePtr prevalue; // canonical holes 1..out_dim
  KernelPtr kernel;  // R^{hole_count} to R^{out_dim}
  double weight;
};

struct ModularDistribution {
  PreTerm pre;
  long fuel = 0;
  std::vector<ModularEntry> entries; // distinct (prevalue, kernel), positive weights
  double mass() const;
};

ModularDistribution modular_eval(const PreTerm& pre, long fuel);

EmpiricalMeasure modular_reconstruct(const ModularDistribution& dist,
                                     const std::vector<double>& reals, size_t samples,
                                     uint64_t seed, uint64_t stream = 0);

DiscreteMeasure modular_exact_grid(const ModularDistribution& dist,
                                   const std::vector<double>& reals, int grid_points,
                                   int max_draws = 4);

Json modular_report(const ModularDistribution& dist);

// ---------------------------------------------------------------------------
// Weak-convergence audit along a parameter sequence
// ---------------------------------------------------------------------------

struct FellerTestFn {
  std::string name;
  std::function<double(double)> g; // bounded continuous on the embedding line
};

std::vector<FellerTestFn> default_feller_battery();

// real literals map to themselves; other values land on a per-skeleton offset
// perturbed continuously by their embedded reals
double embed_value(const ValuePtr& v);

struct FellerStep {
  std::vector<double> point;
  double max_gap = 0.0;
  std::string argmax_fn;
};

struct FellerReport {
  std::string verdict; // CONVERGENT | DIVERGENT | INCONCLUSIVE
  double noise_floor = 0.0;
  double threshold = 0.0;
  std::vector<FellerStep> steps;
  double tail_gap = 0.0;
  std::string tail_fn;
  bool at_target = false; // final point within 1e-6 of target
  std::string note;
  Json to_json() const;
};

FellerReport feller_audit(const PreTerm& pre, const std::vector<double>& target,
                          const std::vector<std::vector<double>>& sequence, size_t samples,
                          long fuel, uint64_t seed, double divergence_threshold = 0.2,
                          const std::vector<FellerTestFn>& battery = default_feller_battery());

} // namespace lmplambda
