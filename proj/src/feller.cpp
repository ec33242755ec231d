#include "lmplambda/semantics.hpp"

#include <algorithm>
#include <cmath>

namespace lmplambda {

namespace {

double clampd(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

double sigmoid_at(double x, double t) { return 1.0 / (1.0 + std::exp(-(x - t) / 0.05)); }

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// mean of g over the embedded outcomes; divergent runs contribute zero, so
// the constant-1 member of the battery tracks total mass
std::vector<double> expectations(const EmpiricalMeasure& m,
                                 const std::vector<FellerTestFn>& battery) {
  std::vector<double> e(battery.size(), 0.0);
  for (const auto& v : m.converged) {
    double x = embed_value(v);
    for (size_t j = 0; j < battery.size(); ++j) e[j] += battery[j].g(x);
  }
  for (auto& x : e) x /= (double)m.samples;
  return e;
}

} // namespace

std::vector<FellerTestFn> default_feller_battery() {
  std::vector<FellerTestFn> b;
  b.push_back({"const1", [](double) { return 1.0; }});
  b.push_back({"ramp_up", [](double x) { return clampd(0.5 * x, -1.0, 1.0); }});
  b.push_back({"ramp_down", [](double x) { return clampd(-0.5 * x + 0.25, -1.0, 1.0); }});
  b.push_back({"sigmoid_1_4", [](double x) { return sigmoid_at(x, 0.25); }});
  b.push_back({"sigmoid_1_2", [](double x) { return sigmoid_at(x, 0.5); }});
  b.push_back({"sigmoid_3_4", [](double x) { return sigmoid_at(x, 0.75); }});
  return b;
}

double embed_value(const ValuePtr& v) {
  if (auto* r = std::get_if<VReal>(&v->node)) return r->r;
  Factorized f = factorize(m_val(v));
  uint64_t h = fnv1a(print_term(f.pre.skeleton));
  double offset = -2.0 + 4.5 * (double)(h % (1ull << 20)) / (double)(1ull << 20);
  double perturb = 0.0;
  double scale = 0.5;
  for (double r : f.reals) {
    perturb += scale * std::tanh(r);
    scale *= 0.5;
  }
  return offset + 0.1 * perturb;
}

Json FellerReport::to_json() const {
  Json j;
  j["verdict"] = verdict;
  j["noise_floor"] = noise_floor;
  j["threshold"] = threshold;
  j["at_target"] = at_target;
  j["tail"] = Json{{"gap", tail_gap}, {"fn", tail_fn}};
  Json st = Json::array();
  for (const auto& s : steps)
    st.push_back(Json{{"point", s.point}, {"max_gap", s.max_gap}, {"argmax_fn", s.argmax_fn}});
  j["steps"] = st;
  if (!note.empty()) j["note"] = note;
  return j;
}

FellerReport feller_audit(const PreTerm& pre, const std::vector<double>& target,
                          const std::vector<std::vector<double>>& sequence, size_t samples,
                          long fuel, uint64_t seed, double divergence_threshold,
                          const std::vector<FellerTestFn>& battery) {
  if (battery.empty()) throw std::runtime_error("feller_audit: empty test battery");
  for (const auto& fn : battery)
    if (!fn.g) throw std::runtime_error("feller_audit: battery entry " + fn.name + " has no body");
  if ((int)target.size() != pre.hole_count)
    throw std::runtime_error("feller_audit: target arity mismatch");
  if (sequence.empty()) throw std::runtime_error("feller_audit: empty parameter sequence");
  for (const auto& p : sequence)
    if (p.size() != target.size())
      throw std::runtime_error("feller_audit: sequence point arity mismatch");

  FellerReport rep;
  rep.noise_floor = 3.0 / std::sqrt((double)samples);
  rep.threshold = divergence_threshold;

  std::vector<double> dist;
  for (const auto& p : sequence) dist.push_back(euclid(p, target));
  for (size_t i = 1; i < dist.size(); ++i)
    if (dist[i] > dist[i - 1] + 1e-12) {
      rep.verdict = "INCONCLUSIVE";
      rep.note = "parameter sequence does not approach the target (distance increases at step " +
                 std::to_string(i + 1) + ")";
      return rep;
    }
  rep.at_target = dist.back() <= 1e-6;

  bool constant_at_target = true;
  for (double d : dist)
    if (d > 1e-15) constant_at_target = false;
  if (constant_at_target) {
    rep.verdict = "CONVERGENT";
    rep.at_target = true;
    rep.note = "sequence is constantly at the target";
    return rep;
  }
  if (!rep.at_target)
    rep.note = "tail distance " + std::to_string(dist.back()) +
               " has not reached 1e-6; audit covers the sampled prefix only";

  EmpiricalMeasure limit = estimate(fill(pre, target), samples, fuel, seed, 0);
  std::vector<double> e_limit = expectations(limit, battery);

  for (size_t i = 0; i < sequence.size(); ++i) {
    EmpiricalMeasure m = estimate(fill(pre, sequence[i]), samples, fuel, seed, i + 1);
    std::vector<double> e = expectations(m, battery);
    FellerStep step;
    step.point = sequence[i];
    for (size_t j = 0; j < battery.size(); ++j) {
      double gap = std::fabs(e[j] - e_limit[j]);
      if (gap >= step.max_gap) {
        step.max_gap = gap;
        step.argmax_fn = battery[j].name;
      }
    }
    rep.steps.push_back(std::move(step));
  }

  rep.tail_gap = rep.steps.back().max_gap;
  rep.tail_fn = rep.steps.back().argmax_fn;

  size_t window = std::max<size_t>(1, rep.steps.size() / 4);
  double min_tail = rep.steps.back().max_gap;
  for (size_t i = rep.steps.size() - window; i < rep.steps.size(); ++i)
    min_tail = std::min(min_tail, rep.steps[i].max_gap);

  if (min_tail >= divergence_threshold)
    rep.verdict = "DIVERGENT";
  else if (rep.tail_gap <= rep.noise_floor)
    rep.verdict = "CONVERGENT";
  else
    rep.verdict = "INCONCLUSIVE";
  return rep;
}

} // namespace lmplambda
