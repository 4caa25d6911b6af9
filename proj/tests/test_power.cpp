#include <doctest.h>

#include <cmath>

#include "matlrt/power.hpp"
#include "support.hpp"

using namespace matlrt;

namespace {

struct Moments {
  double mean_abs_max = 0.0;  // largest |entrywise mean|
  double var_min = 1e300, var_max = 0.0;
  double cross_abs_max = 0.0;  // largest |covariance| between distinct entries
};

Moments entry_moments(const AlternativeSpec& alt, int draws, std::uint64_t seed) {
  const int d = alt.m * alt.m;
  Vector sum = Vector::Zero(d);
  Matrix outer = Matrix::Zero(d, d);
  for (int s = 0; s < draws; ++s) {
    RngStream rng(seed, s);
    const Matrix y = sample_alternative(alt, rng).entries();
    const Eigen::Map<const Vector> v(y.data(), d);
    sum += v;
    outer.selfadjointView<Eigen::Lower>().rankUpdate(v);
  }
  const Vector mean = sum / draws;
  Matrix cov = Matrix(outer.selfadjointView<Eigen::Lower>()) / draws - mean * mean.transpose();
  Moments out;
  out.mean_abs_max = mean.cwiseAbs().maxCoeff();
  out.var_min = cov.diagonal().minCoeff();
  out.var_max = cov.diagonal().maxCoeff();
  cov.diagonal().setZero();
  out.cross_abs_max = cov.cwiseAbs().maxCoeff();
  return out;
}

}  // namespace

TEST_CASE("null alternatives give i.i.d. standard normal entries") {
  for (const auto& alt : {AlternativeSpec::exchangeable(4, 0.0, 0.0), AlternativeSpec::blockmodel(4, 0.0),
                          AlternativeSpec::sparse_pair(4, 0.0)}) {
    const Moments mo = entry_moments(alt, 20000, 401);
    CHECK(mo.mean_abs_max < 0.03);
    CHECK(mo.var_min > 0.95);
    CHECK(mo.var_max < 1.05);
    CHECK(mo.cross_abs_max < 0.04);
  }
}

TEST_CASE("sparse pair correlates exactly the first two rows") {
  const auto alt = AlternativeSpec::sparse_pair(3, 0.6);
  std::vector<double> a, b, c;
  for (int s = 0; s < 20000; ++s) {
    RngStream rng(402, s);
    const Matrix y = sample_alternative(alt, rng).entries();
    a.push_back(y(0, 1));
    b.push_back(y(1, 1));
    c.push_back(y(2, 1));
  }
  CHECK(testing::correlation(a, b) == doctest::Approx(0.6).epsilon(0.05));
  CHECK(std::abs(testing::correlation(a, c)) < 0.03);
}

TEST_CASE("blockmodel has mean zero") {
  const auto alt = AlternativeSpec::blockmodel(50, 2.0);
  const int draws = 10000;
  Matrix sum = Matrix::Zero(50, 50);
  double total = 0.0, total2 = 0.0;
  for (int s = 0; s < draws; ++s) {
    RngStream rng(403, s);
    const Matrix y = sample_alternative(alt, rng).entries();
    sum += y;
    total += y.sum();
    total2 += y.sum() * y.sum();
  }
  // Entry sd is sqrt(1 + mu^2 / 2) = sqrt(3).
  CHECK((sum / draws).cwiseAbs().maxCoeff() < 5.0 * std::sqrt(3.0 / draws));
  const double mean_total = total / draws;
  const double se_total = std::sqrt((total2 / draws - mean_total * mean_total) / draws);
  CHECK(std::abs(mean_total) < 4.0 * se_total);
}

TEST_CASE("alternative validation") {
  CHECK_NOTHROW(AlternativeSpec::exchangeable(10, -0.11, 0.99).validate());
  CHECK_THROWS_AS(AlternativeSpec::exchangeable(10, -1.0 / 9.0, 0.0).validate(), DataError);
  CHECK_THROWS_AS(AlternativeSpec::exchangeable(10, 0.0, 1.2).validate(), DataError);
  CHECK_THROWS_AS(AlternativeSpec::sparse_pair(5, 1.0).validate(), DataError);
  CHECK_THROWS_AS(AlternativeSpec::sparse_pair(5, -1.0).validate(), DataError);
  CHECK_THROWS_AS(AlternativeSpec::blockmodel(5, -0.1).validate(), DataError);
  CHECK_THROWS_AS(AlternativeSpec::blockmodel(1, 1.0).validate(), DataError);
  for (auto kind : {AlternativeKind::kExchangeable, AlternativeKind::kSparsePair, AlternativeKind::kBlockmodel})
    CHECK(parse_alternative_kind(to_string(kind)) == kind);
  CHECK_THROWS_AS(parse_alternative_kind("circle"), DataError);
}

TEST_CASE("exchangeable grid stays inside the positive definite range") {
  const auto grid = exchangeable_grid(10, 7);
  CHECK(grid.size() == 49);
  for (const auto& alt : grid) {
    CHECK_NOTHROW(alt.validate());
    CHECK(alt.m == 10);
  }
  CHECK(grid.front().rho_r < -0.1);
  CHECK(grid.back().rho_r > 0.98);
}

TEST_CASE("power under the null is the level") {
  const std::vector<AlternativeSpec> alts{AlternativeSpec::exchangeable(10, 0.0, 0.0)};
  PowerOptions options;
  options.n_reps = 2000;
  const auto points = power_curve(alts, options);
  REQUIRE(points.size() == 1);
  const auto& p = points.front();
  CHECK(p.power >= 0.038);
  CHECK(p.power <= 0.064);
  CHECK(p.power == static_cast<double>(p.rejections) / p.n_reps);
  CHECK(p.mc_se == doctest::Approx(std::sqrt(p.power * (1 - p.power) / p.n_reps)));
  CHECK(p.critical_value > 140.0);
}

TEST_CASE("power curves are reproducible and scheduling independent") {
  const std::vector<AlternativeSpec> alts{AlternativeSpec::sparse_pair(6, 0.5),
                                          AlternativeSpec::blockmodel(6, 1.0),
                                          AlternativeSpec::exchangeable(5, 0.3, -0.1)};
  PowerOptions options;
  options.n_reps = 300;
  options.S = 1000;
  options.workers = 1;
  const auto a = power_curve(alts, options);
  options.workers = 3;
  const auto b = power_curve(alts, options);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].rejections == b[i].rejections);
    CHECK(a[i].critical_value == b[i].critical_value);
  }
  options.seed = 2;
  const auto c = power_curve(alts, options);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].rejections != c[i].rejections;
  CHECK(differs);
}
