#include <cmath>
#include <vector>

#include "doctest.h"
#include "lmplambda/measures.hpp"
#include "lmplambda/rng.hpp"

using namespace lmplambda;

namespace {

const std::vector<std::string> kABC = {"a", "b", "c"};

FiniteMeasure make(const std::vector<std::string>& pts, std::vector<double> ws) {
  FiniteMeasure m;
  m.points = pts;
  m.weights = std::move(ws);
  m.validate();
  return m;
}

double row_sum(const Coupling& c, size_t i) {
  double s = 0;
  for (double x : c.w[i]) s += x;
  return s;
}

double col_sum(const Coupling& c, size_t j) {
  double s = 0;
  for (const auto& row : c.w) s += row[j];
  return s;
}

} // namespace

TEST_CASE("completion appends exactly the missing mass") {
  FiniteMeasure half = make({"a", "b"}, {0.25, 0.25});
  FiniteMeasure c = bot_complete(half);
  REQUIRE(c.points.size() == 3);
  CHECK(c.weights[2] == doctest::Approx(0.5));
  CHECK(c.total() == doctest::Approx(1.0));

  FiniteMeasure full = make({"a"}, {1.0});
  FiniteMeasure cf = bot_complete(full);
  REQUIRE(cf.points.size() == 2);
  CHECK(cf.weights[1] == 0.0);
}

TEST_CASE("total variation after completion") {
  FiniteMeasure p = make({"0", "1"}, {0.5, 0.5});
  FiniteMeasure q = make({"0", "1"}, {0.75, 0.25});
  CHECK(tv_discrete(p, q) == doctest::Approx(0.25));
  CHECK(tv_discrete(p, p) == 0.0);

  FiniteMeasure da = make({"a", "b"}, {1.0, 0.0});
  FiniteMeasure db = make({"a", "b"}, {0.0, 1.0});
  CHECK(tv_discrete(da, db) == doctest::Approx(1.0));

  FiniteMeasure sub = make({"a", "b"}, {0.5, 0.0});
  CHECK(tv_discrete(da, sub) == doctest::Approx(0.5));
  CHECK_THROWS(tv_discrete(da, p));
}

TEST_CASE("blockwise lifting recognizes within-block transfers") {
  EquivRelation r = EquivRelation::from_blocks(kABC, {{"a", "b"}, {"c"}});
  FiniteMeasure mu = make(kABC, {0.5, 0.0, 0.5});
  FiniteMeasure nu = make(kABC, {0.0, 0.5, 0.5});
  CHECK(gamma_related(r, mu, nu));
  CHECK(gamma_related(r, mu, mu));
  CHECK(gamma_related(r, nu, mu));

  EquivRelation id = EquivRelation::identity(kABC);
  CHECK(!gamma_related(id, mu, nu));
  CHECK(gamma_related(id, mu, mu));

  EquivRelation top = EquivRelation::total(kABC);
  CHECK(gamma_related(top, mu, nu));
}

TEST_CASE("blockwise lifting compares missing mass too") {
  EquivRelation top = EquivRelation::total(kABC);
  FiniteMeasure full = make(kABC, {0.5, 0.25, 0.25});
  FiniteMeasure half = make(kABC, {0.25, 0.25, 0.0});
  CHECK(!gamma_related(top, full, half));
  CHECK(gamma_related(top, half, make(kABC, {0.0, 0.0, 0.5})));
}

TEST_CASE("coupling search mirrors the blockwise decision") {
  EquivRelation r = EquivRelation::from_blocks(kABC, {{"a", "b"}, {"c"}});
  FiniteMeasure mu = make(kABC, {0.5, 0.0, 0.5});
  FiniteMeasure nu = make(kABC, {0.0, 0.5, 0.5});

  auto wit = theta_related(r, mu, nu);
  REQUIRE(wit.has_value());
  const Coupling& c = *wit;
  REQUIRE(c.rows.size() == 4);
  REQUIRE(c.cols.size() == 4);
  for (size_t i = 0; i < c.rows.size(); ++i)
    CHECK(row_sum(c, i) == doctest::Approx(bot_complete(mu).weights[i]).epsilon(1e-9));
  for (size_t j = 0; j < c.cols.size(); ++j)
    CHECK(col_sum(c, j) == doctest::Approx(bot_complete(nu).weights[j]).epsilon(1e-9));
  CHECK(c.w[0][1] == doctest::Approx(0.5));
  CHECK(c.w[2][2] == doctest::Approx(0.5));

  EquivRelation id = EquivRelation::identity(kABC);
  CHECK(!theta_related(id, mu, nu).has_value());
  auto diag = theta_related(id, mu, mu);
  REQUIRE(diag.has_value());
  for (size_t i = 0; i + 1 < kABC.size(); ++i)
    CHECK(diag->w[i][i] == doctest::Approx(mu.weights[i]));
}

TEST_CASE("witness support never leaves the relation") {
  RngStream g(21, 0);
  std::vector<std::string> carrier = {"a", "b", "c", "d"};
  EquivRelation r = EquivRelation::from_blocks(carrier, {{"a", "b"}, {"c", "d"}});
  for (int t = 0; t < 200; ++t) {
    std::vector<double> wa(4), wb(4);
    double sa = 0, sb = 0;
    for (int i = 0; i < 4; ++i) {
      wa[i] = (double)(g.next_u64() % 5);
      wb[i] = (double)(g.next_u64() % 5);
      sa += wa[i];
      sb += wb[i];
    }
    for (int i = 0; i < 4; ++i) {
      wa[i] = sa ? wa[i] / sa : 0.0;
      wb[i] = sb ? wb[i] / sb : 0.0;
    }
    FiniteMeasure mu = make(carrier, wa), nu = make(carrier, wb);
    auto wit = theta_related(r, mu, nu);
    bool blockwise = gamma_related(r, mu, nu);
    CHECK(wit.has_value() == blockwise);
    if (!wit) continue;
    for (size_t i = 0; i + 1 < wit->rows.size(); ++i)
      for (size_t j = 0; j + 1 < wit->cols.size(); ++j)
        if (wit->w[i][j] > 1e-12) CHECK(r.related((int)i, (int)j));
  }
}

TEST_CASE("randomized agreement sweeps come back clean") {
  GammaThetaReport eq = check_gamma_eq_theta(6, 2000, 7);
  CHECK(eq.trials == 2000);
  CHECK(eq.disagreements == 0);
  CHECK(eq.related_count > 0);
  CHECK(eq.related_count < eq.trials);

  GammaThetaReport sub = check_theta_subset_gamma(6, 2000, 8);
  CHECK(sub.disagreements == 0);
}

TEST_CASE("ks critical constant and thresholds") {
  CHECK(ks_critical_c(0.01) == doctest::Approx(1.6276).epsilon(1e-3));
  CHECK(ks_critical_c(0.05) == doctest::Approx(1.3581).epsilon(1e-3));

  std::vector<double> xs;
  RngStream g(5, 0);
  for (int i = 0; i < 400; ++i) xs.push_back(g.uniform());
  KsDecision d = ks_two_sample(xs, xs);
  CHECK(d.statistic == 0.0);
  CHECK(d.accept);
  CHECK(d.threshold ==
        doctest::Approx(ks_critical_c(0.01) * std::sqrt(800.0 / (400.0 * 400.0))));
}

TEST_CASE("ks separates shifted samples and accepts matched ones") {
  RngStream g1(6, 0), g2(6, 1);
  std::vector<double> a, b, shifted;
  for (int i = 0; i < 4000; ++i) {
    a.push_back(g1.uniform());
    double u = g2.uniform();
    b.push_back(u);
    shifted.push_back(u + 0.5);
  }
  CHECK(ks_two_sample(a, b).accept);
  KsDecision d = ks_two_sample(a, shifted);
  CHECK(!d.accept);
  CHECK(d.statistic >= 0.45);
}

TEST_CASE("one-sample ks against explicit laws") {
  RngStream g(9, 0);
  std::vector<double> xs;
  for (int i = 0; i < 4000; ++i) xs.push_back(g.uniform());
  auto ucdf = [](double x) { return x < 0 ? 0.0 : (x > 1 ? 1.0 : x); };
  CHECK(ks_one_sample(xs, ucdf).accept);
  CHECK(!ks_one_sample(xs, std_normal_cdf).accept);
  KsDecision d = ks_one_sample(xs, ucdf, 0.01);
  CHECK(d.threshold == doctest::Approx(ks_critical_c(0.01) / std::sqrt(4000.0)));
}

TEST_CASE("normal cdf reference points") {
  CHECK(std_normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(std_normal_cdf(1.96) == doctest::Approx(0.9750).epsilon(1e-3));
  CHECK(std_normal_cdf(-1.96) == doctest::Approx(0.0250).epsilon(1e-2));
  CHECK(std_normal_cdf(6.0) > 0.999999);
}

TEST_CASE("band-coupling probe across discretization levels") {
  ProbeLevel constant{{0.0, 1.0}, {1.0, 0.0}, {1.0, 0.0}};
  Json same = theta_stability_probe({constant, constant}, 0.0);
  CHECK(same["pass"] == true);
  CHECK(same["limit_feasible"] == true);

  std::vector<ProbeLevel> approach;
  for (int n = 1; n <= 6; ++n) {
    double x = 1.0 / std::pow(2.0, n);
    approach.push_back(ProbeLevel{{0.0, x}, {0.0, 1.0}, {1.0, 0.0}});
  }
  approach.push_back(ProbeLevel{{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}});
  Json near = theta_stability_probe(approach, 0.1);
  CHECK(near["levels"].size() == 7);
  CHECK(near["limit_feasible"] == true);

  Json far = theta_stability_probe({ProbeLevel{{0.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}}}, 0.1);
  CHECK(far["pass"] == false);
  CHECK(far.contains("finding"));

  std::vector<double> grid, w;
  for (int i = 0; i < 10; ++i) {
    grid.push_back((i + 0.5) / 10.0);
    w.push_back(0.1);
  }
  Json band = theta_stability_probe({ProbeLevel{grid, w, w}}, 0.1);
  CHECK(band["pass"] == true);
}
