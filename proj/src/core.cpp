#include "matlrt/core.hpp"

#include <cmath>
#include <string>

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "matlrt/linalg.hpp"

namespace matlrt {

namespace {

void require_dims(const SeparableCovariance& cov, int m) {
  if (cov.m() != m) {
    throw DataError("covariance dimension " + std::to_string(cov.m()) +
                    " does not match m = " + std::to_string(m));
  }
}

}  // namespace

RelationalMatrix::RelationalMatrix(Matrix entries, bool diagonal_defined)
    : entries_(std::move(entries)), diagonal_defined_(diagonal_defined) {
  if (entries_.rows() != entries_.cols()) {
    throw DataError("relational matrix must be square, got " +
                    std::to_string(entries_.rows()) + "x" +
                    std::to_string(entries_.cols()));
  }
  if (entries_.rows() < 2) {
    throw DataError("relational matrix needs at least two nodes");
  }
  if (!diagonal_defined_) entries_.diagonal().setZero();
  if (!entries_.allFinite()) {
    throw DataError("relational matrix has non-finite entries");
  }
}

RelationalMatrix RelationalMatrix::with_missing_diagonal() const {
  return RelationalMatrix(entries_, false);
}

SeparableCovariance::SeparableCovariance(Matrix sigma_r, Matrix sigma_c)
    : sigma_r_(std::move(sigma_r)), sigma_c_(std::move(sigma_c)) {
  if (sigma_r_.rows() != sigma_c_.rows() || sigma_r_.rows() < 1) {
    throw DataError("row and column covariances must have equal dimension");
  }
  if (!linalg::is_symmetric(sigma_r_) || !linalg::is_symmetric(sigma_c_)) {
    throw DataError("covariance matrices must be symmetric");
  }
  linalg::factor_spd(sigma_r_, 0.0, "sigma_r");
  linalg::factor_spd(sigma_c_, 0.0, "sigma_c");
}

SeparableCovariance SeparableCovariance::identity(int m) {
  return {Matrix::Identity(m, m), Matrix::Identity(m, m)};
}

DiagonalCovariance::DiagonalCovariance(Vector d_r, Vector d_c)
    : d_r_(std::move(d_r)), d_c_(std::move(d_c)) {
  if (d_r_.size() != d_c_.size() || d_r_.size() < 1) {
    throw DataError("diagonal covariances must have equal length");
  }
  if (!(d_r_.array() > 0).all() || !(d_c_.array() > 0).all() ||
      !d_r_.allFinite() || !d_c_.allFinite()) {
    throw DataError("diagonal covariance entries must be positive");
  }
}

SeparableCovariance DiagonalCovariance::to_separable() const {
  return {Matrix(d_r_.asDiagonal()), Matrix(d_c_.asDiagonal())};
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  const std::uint64_t a = mix64(seed);
  const std::uint64_t b = mix64(a ^ mix64(stream_id + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  engine_.seed(seq);
}

double RngStream::normal() {
  boost::random::normal_distribution<double> dist;
  return dist(engine_);
}

double RngStream::uniform() {
  boost::random::uniform_01<double> dist;
  return dist(engine_);
}

double RngStream::chi_squared(double dof) {
  boost::random::chi_squared_distribution<double> dist(dof);
  return dist(engine_);
}

Matrix standard_normal_matrix(int m, RngStream& rng) {
  Matrix z(m, m);
  boost::random::normal_distribution<double> dist;
  double* data = z.data();
  for (Eigen::Index k = 0; k < z.size(); ++k) data[k] = dist(rng.engine());
  return z;
}

RelationalMatrix sample_matrix_normal(int m, const SeparableCovariance& cov,
                                      RngStream& rng) {
  require_dims(cov, m);
  const Matrix root_r = linalg::factor_spd(cov.sigma_r(), linalg::kEigenFloor, "sigma_r").sqrt();
  const Matrix root_c = linalg::factor_spd(cov.sigma_c(), linalg::kEigenFloor, "sigma_c").sqrt();
  return RelationalMatrix(root_r * standard_normal_matrix(m, rng) * root_c);
}

RelationalMatrix sample_matrix_t(int m, const SeparableCovariance& cov,
                                 double dof, RngStream& rng) {
  if (!(dof > 0.0)) throw DataError("degrees of freedom must be positive");
  RelationalMatrix normal = sample_matrix_normal(m, cov, rng);
  const double w = rng.chi_squared(dof) / dof;
  return RelationalMatrix(normal.entries() / std::sqrt(w));
}

double scaled_log_likelihood(const RelationalMatrix& y,
                             const SeparableCovariance& cov) {
  require_dims(cov, y.m());
  const auto fr = linalg::factor_spd(cov.sigma_r(), linalg::kEigenFloor, "sigma_r");
  const auto fc = linalg::factor_spd(cov.sigma_c(), linalg::kEigenFloor, "sigma_c");
  // tr[Sr^-1 Y Sc^-1 Y^t] = ||Sr^-1/2 Y Sc^-1/2||_F^2
  const Matrix w = fr.inverse_sqrt() * y.entries() * fc.inverse_sqrt();
  const double m = y.m();
  return w.squaredNorm() + m * fr.log_det() + m * fc.log_det();
}

Matrix exchangeable_correlation(int m, double rho) {
  Matrix s = Matrix::Constant(m, m, rho);
  s.diagonal().setOnes();
  return s;
}

}  // namespace matlrt
