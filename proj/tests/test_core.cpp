#include <doctest.h>

#include <cmath>

#include "matlrt/core.hpp"
#include "support.hpp"

using namespace matlrt;
using testing::random_matrix;

namespace {

// Empirical covariance of vec(Y) over n draws (mean known to be zero).
template <typename Draw>
Matrix vec_covariance(int m, int n, Draw&& draw) {
  const int d = m * m;
  Matrix acc = Matrix::Zero(d, d);
  constexpr int kChunk = 1000;
  Matrix block(d, kChunk);
  for (int done = 0; done < n; done += kChunk) {
    for (int c = 0; c < kChunk; ++c) {
      const Matrix y = draw();
      block.col(c) = Eigen::Map<const Vector>(y.data(), d);
    }
    acc.selfadjointView<Eigen::Lower>().rankUpdate(block);
  }
  Matrix full = acc.selfadjointView<Eigen::Lower>();
  return full / n;
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

double kurtosis(const std::vector<double>& x) {
  double m2 = 0, m4 = 0;
  for (double v : x) {
    m2 += v * v;
    m4 += v * v * v * v;
  }
  m2 /= x.size();
  m4 /= x.size();
  return m4 / (m2 * m2);
}

}  // namespace

TEST_CASE("relational matrix validation") {
  CHECK_THROWS_AS(RelationalMatrix(Matrix::Zero(2, 3)), DataError);
  CHECK_THROWS_AS(RelationalMatrix(Matrix::Zero(1, 1)), DataError);
  Matrix bad = Matrix::Identity(3, 3);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(RelationalMatrix{bad}, DataError);

  // An undefined diagonal may hold anything, including NaN; it is zero-filled.
  Matrix y = Matrix::Constant(3, 3, 2.0);
  y(1, 1) = std::nan("");
  const RelationalMatrix r(y, false);
  CHECK_FALSE(r.diagonal_defined());
  CHECK(r.entries().diagonal().isZero());
  CHECK(r.entries()(0, 1) == 2.0);
}

TEST_CASE("covariance validation") {
  CHECK_THROWS_AS(SeparableCovariance(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), DataError);
  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(SeparableCovariance(asym, Matrix::Identity(3, 3)), DataError);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(0, 1) = indefinite(1, 0) = 2.0;
  CHECK_THROWS_AS(SeparableCovariance(indefinite, Matrix::Identity(2, 2)), NumericalError);
  CHECK_THROWS_AS(DiagonalCovariance(Vector::Ones(3), Vector::Zero(3)), DataError);

  RngStream rng(1, 0);
  CHECK_THROWS_AS(sample_matrix_normal(4, SeparableCovariance::identity(3), rng), DataError);
  CHECK_THROWS_AS(sample_matrix_t(3, SeparableCovariance::identity(3), 0.0, rng), DataError);
}

TEST_CASE("rng streams") {
  RngStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  std::vector<double> xa, xc, xd;
  for (int i = 0; i < 5000; ++i) {
    const double v = a.normal();
    CHECK(v == b.normal());
    xa.push_back(v);
    xc.push_back(c.normal());
    xd.push_back(d.normal());
  }
  CHECK(xa != xc);
  CHECK(xa != xd);
  CHECK(std::abs(testing::correlation(xa, xc)) < 0.05);
  CHECK(std::abs(testing::correlation(xa, xd)) < 0.05);
}

TEST_CASE("matrix normal sampler with identity covariances") {
  RngStream rng(11, 0);
  const auto cov = SeparableCovariance::identity(3);
  const Matrix s = vec_covariance(3, 100000, [&] { return sample_matrix_normal(3, cov, rng).entries(); });
  CHECK((s - Matrix::Identity(9, 9)).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("matrix normal sampler matches the Kronecker covariance") {
  const int m = 10;
  const SeparableCovariance cov(exchangeable_correlation(m, 0.5), Matrix::Identity(m, m));
  RngStream rng(12, 0);
  const Matrix s = vec_covariance(m, 100000, [&] { return sample_matrix_normal(m, cov, rng).entries(); });
  const Matrix expected = kronecker(cov.sigma_c(), cov.sigma_r());
  CHECK((s - expected).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("diagonal transforms of matrix normal draws") {
  const int m = 3;
  RngStream setup(13, 0);
  const Matrix sr = testing::random_spd(m, setup);
  const Matrix sc = testing::random_spd(m, setup);
  const Vector d1 = testing::random_positive(m, setup, 1.5);
  const Vector d2 = testing::random_positive(m, setup, 1.5);

  RngStream ra(13, 1), rb(13, 2);
  const SeparableCovariance base(sr, sc);
  const SeparableCovariance scaled(d1.asDiagonal() * sr * d1.asDiagonal(),
                                   d2.asDiagonal() * sc * d2.asDiagonal());
  const Matrix transformed = vec_covariance(m, 100000, [&] {
    return Matrix(d1.asDiagonal() * sample_matrix_normal(m, base, ra).entries() * d2.asDiagonal());
  });
  const Matrix direct = vec_covariance(m, 100000, [&] { return sample_matrix_normal(m, scaled, rb).entries(); });
  const Matrix expected = kronecker(scaled.sigma_c(), scaled.sigma_r());
  const double scale = expected.diagonal().maxCoeff();
  CHECK((transformed - expected).cwiseAbs().maxCoeff() < 0.04 * scale);
  CHECK((direct - expected).cwiseAbs().maxCoeff() < 0.04 * scale);
}

TEST_CASE("samplers are reproducible") {
  const SeparableCovariance cov(exchangeable_correlation(4, 0.3), Matrix::Identity(4, 4));
  RngStream a(5, 9), b(5, 9);
  CHECK(sample_matrix_normal(4, cov, a).entries() == sample_matrix_normal(4, cov, b).entries());
  CHECK(sample_matrix_t(4, cov, 3.0, a).entries() == sample_matrix_t(4, cov, 3.0, b).entries());
}

TEST_CASE("matrix-t with huge dof is indistinguishable from the normal") {
  const auto cov = SeparableCovariance::identity(3);
  RngStream ra(21, 0), rb(21, 1);
  std::vector<double> t, z;
  for (int i = 0; i < 100000; ++i) {
    t.push_back(sample_matrix_t(3, cov, 1e9, ra).entries()(0, 1));
    z.push_back(sample_matrix_normal(3, cov, rb).entries()(0, 1));
  }
  CHECK(testing::ks_distance(t, z) < 0.01);
}

TEST_CASE("matrix-t with 3 dof is heavy tailed") {
  const auto cov = SeparableCovariance::identity(5);
  RngStream rng(22, 0);
  std::vector<double> x;
  x.reserve(1000000);
  for (int i = 0; i < 1000000; ++i) x.push_back(sample_matrix_t(5, cov, 3.0, rng).entries()(2, 3));
  CHECK(kurtosis(x) > 10.0);
}

TEST_CASE("scaled log likelihood, closed cases") {
  const auto id2 = SeparableCovariance::identity(2);
  CHECK(scaled_log_likelihood(RelationalMatrix(Matrix::Identity(2, 2)), id2) == doctest::Approx(2.0).epsilon(1e-14));
  Matrix y = Matrix::Zero(2, 2);
  y(0, 0) = 1;
  y(1, 1) = 2;
  CHECK(scaled_log_likelihood(RelationalMatrix(y), id2) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("scaled log likelihood matches the dense multivariate normal density") {
  RngStream rng(31, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix y = random_matrix(4, 4, rng);
    const Matrix sr = testing::random_spd(4, rng);
    const Matrix sc = testing::random_spd(4, rng);
    const double ours = scaled_log_likelihood(RelationalMatrix(y), SeparableCovariance(sr, sc));
    const double dense = testing::dense_mvn_scaled_loglik(y, sr, sc);
    CHECK(ours == doctest::Approx(dense).epsilon(1e-10));
  }
}

TEST_CASE("scaled log likelihood invariants") {
  RngStream rng(32, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const int m = 2 + rep % 6;
    const RelationalMatrix y(random_matrix(m, m, rng));
    const Matrix sr = testing::random_spd(m, rng);
    const Matrix sc = testing::random_spd(m, rng);
    const double base = scaled_log_likelihood(y, SeparableCovariance(sr, sc));
    const double a = testing::random_positive(1, rng, 100.0)(0);
    const double moved = scaled_log_likelihood(y, SeparableCovariance(a * sr, sc / a));
    CHECK(std::abs(moved - base) <= 1e-9 * std::max(1.0, std::abs(base)));

    const Matrix gram = y.entries() * y.entries().transpose() / m;
    const double bound = m * m + m * std::log(gram.determinant());
    CHECK(base >= bound - 1e-9);
  }
}
