#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmplambda/rng.hpp"

namespace lmplambda {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Finite sub-probability measures over a named carrier
// ---------------------------------------------------------------------------

struct FiniteMeasure {
  std::vector<std::string> points; // distinct
  std::vector<double> weights;     // nonnegative, total <= 1 + 1e-12

  double total() const;
  void validate() const;
};

FiniteMeasure dirac(const std::vector<std::string>& carrier, const std::string& at);

// appends a fresh point carrying the deficit mass; result is a probability
FiniteMeasure bot_complete(const FiniteMeasure& m);

// 0.5 * Sum |a(x) - b(x)| after completion; carriers must agree
double tv_discrete(const FiniteMeasure& a, const FiniteMeasure& b);

// ---------------------------------------------------------------------------
// Equivalence relations as partitions
// ---------------------------------------------------------------------------

struct EquivRelation {
  std::vector<std::string> carrier;
  std::vector<int> block_id; // per carrier index, 0-based

  static EquivRelation from_blocks(const std::vector<std::string>& carrier,
                                   const std::vector<std::vector<std::string>>& blocks);
  static EquivRelation identity(const std::vector<std::string>& carrier);
  static EquivRelation total(const std::vector<std::string>& carrier);

  bool related(int i, int j) const { return block_id[i] == block_id[j]; }
  int num_blocks() const;
  std::vector<std::vector<int>> blocks() const;
};

// ---------------------------------------------------------------------------
// Relational liftings. Blocks generate the closed-set algebra on a finite
// carrier: every union of blocks is a disjoint block union, so measures agree
// on all closed sets exactly when they agree blockwise.
// ---------------------------------------------------------------------------

bool gamma_related(const EquivRelation& r, const FiniteMeasure& mu, const FiniteMeasure& nu,
                   double tol = 1e-9);

struct Coupling {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<std::vector<double>> w;
  Json to_json() const;
};

// transportation feasibility with an arbitrary allowed-pair predicate over the
// completed carriers; indices refer to completed rows/cols (the appended
// deficit point comes last and is always allowed against itself)
std::optional<Coupling> coupling_feasible(const FiniteMeasure& mu, const FiniteMeasure& nu,
                                          const std::function<bool(int, int)>& allowed,
                                          double tol = 1e-9);

std::optional<Coupling> theta_related(const EquivRelation& r, const FiniteMeasure& mu,
                                      const FiniteMeasure& nu, double tol = 1e-9);

struct GammaThetaReport {
  size_t trials = 0;
  size_t related_count = 0;
  size_t disagreements = 0;
  Json first_disagreement; // null unless a disagreement was found
  Json to_json() const;
};

// randomized cross-check gamma_related <=> coupling exists
GammaThetaReport check_gamma_eq_theta(int max_points, size_t trials, uint64_t seed);
// randomized check that every witness has exact marginals, allowed support,
// and implies gamma_related
GammaThetaReport check_theta_subset_gamma(int max_points, size_t trials, uint64_t seed);

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov machinery
// ---------------------------------------------------------------------------

struct KsDecision {
  double statistic = 0.0;
  double threshold = 0.0;
  bool accept = false;
  size_t n = 0;
  size_t m = 0;
  Json to_json() const;
};

double ks_critical_c(double alpha); // sqrt(-ln(alpha/2)/2); c(0.01) ~ 1.628

KsDecision ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha = 0.01);
KsDecision ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf,
                         double alpha = 0.01);

double std_normal_cdf(double x);

// ---------------------------------------------------------------------------
// Coupling stability along converging discretizations of a closed relation
// ---------------------------------------------------------------------------

struct ProbeLevel {
  std::vector<double> xs; // discretization points, shared by both measures
  std::vector<double> mu;
  std::vector<double> nu;
};

// allowed pairs are |x - y| <= band; the last level is the limit discretization
Json theta_stability_probe(const std::vector<ProbeLevel>& levels, double band,
                           double tol = 1e-6);

} // namespace lmplambda
