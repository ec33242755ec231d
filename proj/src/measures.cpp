#include "lmplambda/measures.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>

namespace lmplambda {

namespace {
constexpr const char* kBot = "\xE2\x8A\xA5"; // the completion point
}

double FiniteMeasure::total() const {
  double s = 0;
  for (double x : weights) s += x;
  return s;
}

void FiniteMeasure::validate() const {
  if (points.size() != weights.size())
    throw std::runtime_error("measure: points/weights length mismatch");
  std::set<std::string> seen;
  for (const auto& p : points)
    if (!seen.insert(p).second) throw std::runtime_error("measure: duplicate point " + p);
  for (double x : weights)
    if (!(x >= 0)) throw std::runtime_error("measure: negative weight");
  if (total() > 1.0 + 1e-12) throw std::runtime_error("measure: total mass exceeds one");
}

FiniteMeasure dirac(const std::vector<std::string>& carrier, const std::string& at) {
  FiniteMeasure m;
  m.points = carrier;
  m.weights.assign(carrier.size(), 0.0);
  for (size_t i = 0; i < carrier.size(); ++i)
    if (carrier[i] == at) {
      m.weights[i] = 1.0;
      return m;
    }
  throw std::runtime_error("dirac: point " + at + " not in carrier");
}

FiniteMeasure bot_complete(const FiniteMeasure& m) {
  m.validate();
  FiniteMeasure out = m;
  out.points.push_back(kBot);
  out.weights.push_back(std::max(0.0, 1.0 - m.total()));
  return out;
}

double tv_discrete(const FiniteMeasure& a, const FiniteMeasure& b) {
  if (a.points != b.points) throw std::runtime_error("tv_discrete: carrier mismatch");
  FiniteMeasure ca = bot_complete(a), cb = bot_complete(b);
  double s = 0;
  for (size_t i = 0; i < ca.weights.size(); ++i) s += std::fabs(ca.weights[i] - cb.weights[i]);
  return 0.5 * s;
}

EquivRelation EquivRelation::from_blocks(const std::vector<std::string>& carrier,
                                         const std::vector<std::vector<std::string>>& blocks) {
  EquivRelation r;
  r.carrier = carrier;
  r.block_id.assign(carrier.size(), -1);
  std::map<std::string, int> index;
  for (size_t i = 0; i < carrier.size(); ++i) index[carrier[i]] = (int)i;
  int bid = 0;
  for (const auto& blk : blocks) {
    for (const auto& p : blk) {
      auto it = index.find(p);
      if (it == index.end()) throw std::runtime_error("relation: unknown point " + p);
      if (r.block_id[it->second] != -1)
        throw std::runtime_error("relation: point " + p + " in two blocks");
      r.block_id[it->second] = bid;
    }
    ++bid;
  }
  for (size_t i = 0; i < carrier.size(); ++i)
    if (r.block_id[i] == -1)
      throw std::runtime_error("relation: point " + carrier[i] + " not covered");
  return r;
}

EquivRelation EquivRelation::identity(const std::vector<std::string>& carrier) {
  EquivRelation r;
  r.carrier = carrier;
  for (size_t i = 0; i < carrier.size(); ++i) r.block_id.push_back((int)i);
  return r;
}

EquivRelation EquivRelation::total(const std::vector<std::string>& carrier) {
  EquivRelation r;
  r.carrier = carrier;
  r.block_id.assign(carrier.size(), 0);
  return r;
}

int EquivRelation::num_blocks() const {
  std::set<int> ids(block_id.begin(), block_id.end());
  return (int)ids.size();
}

std::vector<std::vector<int>> EquivRelation::blocks() const {
  std::map<int, std::vector<int>> by_id;
  for (size_t i = 0; i < block_id.size(); ++i) by_id[block_id[i]].push_back((int)i);
  std::vector<std::vector<int>> out;
  for (auto& [id, blk] : by_id) out.push_back(std::move(blk));
  return out;
}

bool gamma_related(const EquivRelation& r, const FiniteMeasure& mu, const FiniteMeasure& nu,
                   double tol) {
  if (mu.points != r.carrier || nu.points != r.carrier)
    throw std::runtime_error("gamma_related: carrier mismatch");
  mu.validate();
  nu.validate();
  for (const auto& blk : r.blocks()) {
    double a = 0, b = 0;
    for (int i : blk) {
      a += mu.weights[i];
      b += nu.weights[i];
    }
    if (std::fabs(a - b) > tol) return false;
  }
  // the deficit block: totals must match as well
  return std::fabs(mu.total() - nu.total()) <= tol;
}

Json Coupling::to_json() const {
  Json j;
  j["rows"] = rows;
  j["cols"] = cols;
  Json entries = Json::array();
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t k = 0; k < cols.size(); ++k)
      if (w[i][k] > 0) entries.push_back(Json::array({i, k, w[i][k]}));
  j["entries"] = entries;
  return j;
}

namespace {

// Edmonds-Karp on the bipartite transportation graph. Nodes: source 0,
// rows 1..n, cols n+1..n+m, sink n+m+1.
struct Flow {
  int n;
  std::vector<std::vector<double>> cap;
  explicit Flow(int nodes) : n(nodes), cap(nodes, std::vector<double>(nodes, 0.0)) {}

  double run(int s, int t) {
    double pushed = 0;
    for (;;) {
      std::vector<int> prev(n, -1);
      prev[s] = s;
      std::deque<int> q{s};
      while (!q.empty() && prev[t] == -1) {
        int u = q.front();
        q.pop_front();
        for (int v = 0; v < n; ++v)
          if (prev[v] == -1 && cap[u][v] > 1e-15) {
            prev[v] = u;
            q.push_back(v);
          }
      }
      if (prev[t] == -1) return pushed;
      double bottleneck = std::numeric_limits<double>::infinity();
      for (int v = t; v != s; v = prev[v]) bottleneck = std::min(bottleneck, cap[prev[v]][v]);
      for (int v = t; v != s; v = prev[v]) {
        cap[prev[v]][v] -= bottleneck;
        cap[v][prev[v]] += bottleneck;
      }
      pushed += bottleneck;
    }
  }
};

} // namespace

std::optional<Coupling> coupling_feasible(const FiniteMeasure& mu, const FiniteMeasure& nu,
                                          const std::function<bool(int, int)>& allowed,
                                          double tol) {
  FiniteMeasure cm = bot_complete(mu), cn = bot_complete(nu);
  int n = (int)cm.points.size(), m = (int)cn.points.size();
  int bot_r = n - 1, bot_c = m - 1;
  Flow f(n + m + 2);
  int src = 0, snk = n + m + 1;
  for (int i = 0; i < n; ++i) f.cap[src][1 + i] = cm.weights[i];
  for (int j = 0; j < m; ++j) f.cap[1 + n + j][snk] = cn.weights[j];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      bool ok = (i == bot_r || j == bot_c) ? (i == bot_r && j == bot_c) : allowed(i, j);
      if (ok) f.cap[1 + i][1 + n + j] = 2.0; // effectively unbounded
    }
  double pushed = f.run(src, snk);
  if (pushed + tol < 1.0) return std::nullopt;
  Coupling c;
  c.rows = cm.points;
  c.cols = cn.points;
  c.w.assign(n, std::vector<double>(m, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      bool ok = (i == bot_r || j == bot_c) ? (i == bot_r && j == bot_c) : allowed(i, j);
      if (ok) c.w[i][j] = std::max(0.0, 2.0 - f.cap[1 + i][1 + n + j]);
    }
  return c;
}

std::optional<Coupling> theta_related(const EquivRelation& r, const FiniteMeasure& mu,
                                      const FiniteMeasure& nu, double tol) {
  if (mu.points != r.carrier || nu.points != r.carrier)
    throw std::runtime_error("theta_related: carrier mismatch");
  mu.validate();
  nu.validate();
  return coupling_feasible(mu, nu, [&](int i, int j) { return r.related(i, j); }, tol);
}

namespace {

std::vector<std::string> carrier_names(int n) {
  std::vector<std::string> c;
  for (int i = 0; i < n; ++i) c.push_back("x" + std::to_string(i));
  return c;
}

struct Triple {
  EquivRelation r;
  FiniteMeasure mu, nu;
  bool built_related; // nu constructed by within-block redistribution of mu
};

// integer weights over denominator 24 keep block sums reproducible
Triple random_triple(int max_points, RngStream& g) {
  int n = 1 + (int)(g.next_u64() % (uint64_t)max_points);
  std::vector<std::string> carrier = carrier_names(n);
  EquivRelation r;
  r.carrier = carrier;
  int nblocks = 1 + (int)(g.next_u64() % (uint64_t)n);
  for (int i = 0; i < n; ++i) r.block_id.push_back((int)(g.next_u64() % (uint64_t)nblocks));

  const int denom = 24;
  int budget = (int)(g.next_u64() % (uint64_t)(denom + 1));
  std::vector<int> wi(n, 0);
  for (int k = 0; k < budget; ++k) wi[g.next_u64() % (uint64_t)n] += 1;

  FiniteMeasure mu;
  mu.points = carrier;
  for (int i = 0; i < n; ++i) mu.weights.push_back((double)wi[i] / denom);

  FiniteMeasure nu;
  nu.points = carrier;
  nu.weights.assign(n, 0.0);
  bool positive = (g.next_u64() & 1) != 0;
  if (positive) {
    // redistribute each block's integer mass across that block
    std::map<int, std::vector<int>> members;
    for (int i = 0; i < n; ++i) members[r.block_id[i]].push_back(i);
    std::vector<int> vi(n, 0);
    for (auto& [bid, mem] : members) {
      int mass = 0;
      for (int i : mem) mass += wi[i];
      for (int k = 0; k < mass; ++k) vi[mem[g.next_u64() % mem.size()]] += 1;
    }
    for (int i = 0; i < n; ++i) nu.weights[i] = (double)vi[i] / denom;
  } else {
    int b2 = (int)(g.next_u64() % (uint64_t)(denom + 1));
    std::vector<int> vi(n, 0);
    for (int k = 0; k < b2; ++k) vi[g.next_u64() % (uint64_t)n] += 1;
    for (int i = 0; i < n; ++i) nu.weights[i] = (double)vi[i] / denom;
  }
  return {std::move(r), std::move(mu), std::move(nu), positive};
}

Json triple_json(const Triple& t) {
  Json j;
  j["carrier"] = t.r.carrier;
  j["block_id"] = t.r.block_id;
  j["mu"] = t.mu.weights;
  j["nu"] = t.nu.weights;
  return j;
}

bool witness_valid(const Coupling& c, const FiniteMeasure& mu, const FiniteMeasure& nu,
                   const EquivRelation& r, double tol) {
  FiniteMeasure cm = bot_complete(mu), cn = bot_complete(nu);
  size_t n = cm.weights.size(), m = cn.weights.size();
  if (c.w.size() != n) return false;
  for (size_t i = 0; i < n; ++i) {
    double row = 0;
    for (size_t j = 0; j < m; ++j) {
      if (c.w[i][j] < -tol) return false;
      bool bot_pair = (i == n - 1 && j == m - 1);
      bool off_relation =
          !bot_pair && (i == n - 1 || j == m - 1 || !r.related((int)i, (int)j));
      if (off_relation && c.w[i][j] > tol) return false;
      row += c.w[i][j];
    }
    if (std::fabs(row - cm.weights[i]) > tol) return false;
  }
  for (size_t j = 0; j < m; ++j) {
    double col = 0;
    for (size_t i = 0; i < n; ++i) col += c.w[i][j];
    if (std::fabs(col - cn.weights[j]) > tol) return false;
  }
  return true;
}

} // namespace

Json GammaThetaReport::to_json() const {
  Json j;
  j["trials"] = trials;
  j["related_count"] = related_count;
  j["disagreements"] = disagreements;
  j["first_disagreement"] = first_disagreement;
  return j;
}

GammaThetaReport check_gamma_eq_theta(int max_points, size_t trials, uint64_t seed) {
  GammaThetaReport rep;
  RngStream g(seed, 101);
  for (size_t t = 0; t < trials; ++t) {
    Triple tr = random_triple(max_points, g);
    bool gam = gamma_related(tr.r, tr.mu, tr.nu);
    bool the = theta_related(tr.r, tr.mu, tr.nu).has_value();
    rep.trials += 1;
    if (gam) rep.related_count += 1;
    if (gam != the) {
      rep.disagreements += 1;
      if (rep.first_disagreement.is_null()) {
        rep.first_disagreement = triple_json(tr);
        rep.first_disagreement["gamma"] = gam;
        rep.first_disagreement["theta"] = the;
      }
    }
  }
  return rep;
}

GammaThetaReport check_theta_subset_gamma(int max_points, size_t trials, uint64_t seed) {
  GammaThetaReport rep;
  RngStream g(seed, 202);
  for (size_t t = 0; t < trials; ++t) {
    Triple tr = random_triple(max_points, g);
    rep.trials += 1;
    auto wit = theta_related(tr.r, tr.mu, tr.nu);
    if (!wit) continue;
    rep.related_count += 1;
    bool gam = gamma_related(tr.r, tr.mu, tr.nu);
    bool ok = witness_valid(*wit, tr.mu, tr.nu, tr.r, 1e-9);
    if (!gam || !ok) {
      rep.disagreements += 1;
      if (rep.first_disagreement.is_null()) {
        rep.first_disagreement = triple_json(tr);
        rep.first_disagreement["gamma"] = gam;
        rep.first_disagreement["witness_valid"] = ok;
        rep.first_disagreement["witness"] = wit->to_json();
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

Json KsDecision::to_json() const {
  return Json{{"statistic", statistic}, {"threshold", threshold}, {"accept", accept},
              {"n", n},                 {"m", m}};
}

double ks_critical_c(double alpha) { return std::sqrt(-std::log(alpha / 2.0) / 2.0); }

KsDecision ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha) {
  if (a.empty() || b.empty()) throw std::runtime_error("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::fabs((double)i / a.size() - (double)j / b.size()));
  }
  KsDecision out;
  out.statistic = d;
  out.n = a.size();
  out.m = b.size();
  double nm = (double)a.size() * (double)b.size();
  out.threshold = ks_critical_c(alpha) * std::sqrt((double)(a.size() + b.size()) / nm);
  out.accept = d <= out.threshold;
  return out;
}

KsDecision ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf,
                         double alpha) {
  if (xs.empty()) throw std::runtime_error("ks_one_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  double d = 0;
  size_t n = xs.size();
  for (size_t i = 0; i < n; ++i) {
    double f = cdf(xs[i]);
    d = std::max(d, std::fabs(f - (double)i / n));
    d = std::max(d, std::fabs((double)(i + 1) / n - f));
  }
  KsDecision out;
  out.statistic = d;
  out.n = n;
  out.m = 0;
  out.threshold = ks_critical_c(alpha) / std::sqrt((double)n);
  out.accept = d <= out.threshold;
  return out;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// ---------------------------------------------------------------------------
// coupling stability probe
// ---------------------------------------------------------------------------

Json theta_stability_probe(const std::vector<ProbeLevel>& levels, double band, double tol) {
  if (levels.empty()) throw std::runtime_error("theta_stability_probe: no levels");
  Json out;
  out["band"] = band;
  Json lv = Json::array();
  bool all_ok = true;
  bool limit_ok = false;
  for (size_t k = 0; k < levels.size(); ++k) {
    const ProbeLevel& L = levels[k];
    if (L.xs.size() != L.mu.size() || L.xs.size() != L.nu.size())
      throw std::runtime_error("theta_stability_probe: level shape mismatch");
    FiniteMeasure mu, nu;
    for (size_t i = 0; i < L.xs.size(); ++i) {
      std::string name = "p" + std::to_string(i);
      mu.points.push_back(name);
      nu.points.push_back(name);
      mu.weights.push_back(L.mu[i]);
      nu.weights.push_back(L.nu[i]);
    }
    auto wit = coupling_feasible(
        mu, nu,
        [&](int i, int j) { return std::fabs(L.xs[i] - L.xs[j]) <= band + 1e-12; }, tol);
    bool ok = wit.has_value();
    all_ok = all_ok && ok;
    if (k + 1 == levels.size()) limit_ok = ok;
    lv.push_back(Json{{"points", L.xs.size()}, {"feasible", ok}});
  }
  out["levels"] = lv;
  out["limit_feasible"] = limit_ok;
  out["pass"] = all_ok;
  if (!limit_ok)
    out["finding"] = "no coupling within the band at the limit discretization";
  return out;
}

} // namespace lmplambda
