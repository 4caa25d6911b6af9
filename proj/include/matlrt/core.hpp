#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "matlrt/error.hpp"

namespace matlrt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Square relational data matrix. Entry (i, j) records the directed relation
/// from node i to node j. When the diagonal is structurally undefined it is
/// stored as zeros.
class RelationalMatrix {
public:
  RelationalMatrix() = default;

  /// Throws DataError unless `entries` is square with side >= 2 and finite.
  /// If `diagonal_defined` is false the diagonal is overwritten with zeros.
  explicit RelationalMatrix(Matrix entries, bool diagonal_defined = true);

  int m() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  bool diagonal_defined() const { return diagonal_defined_; }

  /// Copy with the diagonal marked undefined (zero-filled).
  RelationalMatrix with_missing_diagonal() const;

private:
  Matrix entries_;
  bool diagonal_defined_ = true;
};

/// Row and column covariance pair (sigma_r, sigma_c) of a matrix normal
/// model. The m^2 x m^2 Kronecker product is never formed.
class SeparableCovariance {
public:
  SeparableCovariance() = default;
  SeparableCovariance(Matrix sigma_r, Matrix sigma_c);

  static SeparableCovariance identity(int m);

  int m() const { return static_cast<int>(sigma_r_.rows()); }
  const Matrix& sigma_r() const { return sigma_r_; }
  const Matrix& sigma_c() const { return sigma_c_; }

private:
  Matrix sigma_r_;
  Matrix sigma_c_;
};

/// Diagonal covariance pair (D_r, D_c) stored as positive vectors.
class DiagonalCovariance {
public:
  DiagonalCovariance() = default;
  DiagonalCovariance(Vector d_r, Vector d_c);

  int m() const { return static_cast<int>(d_r_.size()); }
  const Vector& d_r() const { return d_r_; }
  const Vector& d_c() const { return d_c_; }

  SeparableCovariance to_separable() const;

private:
  Vector d_r_;
  Vector d_c_;
};

/// Reproducible random stream identified by (seed, stream_id). Streams with
/// the same identity produce the same sequence; the engine state is derived
/// by hashing both words, so stream s of a Monte Carlo run does not depend
/// on which worker executes it.
class RngStream {
public:
  using engine_type = std::mt19937_64;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  double normal();
  double uniform();  // in [0, 1)
  double chi_squared(double dof);

  engine_type& engine() { return engine_; }

private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  engine_type engine_;
};

/// SplitMix64 finalizer; used to derive stream identities.
std::uint64_t mix64(std::uint64_t x);

/// m x m matrix of i.i.d. standard normals, filled column-major.
Matrix standard_normal_matrix(int m, RngStream& rng);

/// Draw from N_{m x m}(0, sigma_r, sigma_c): sigma_r^{1/2} Z sigma_c^{1/2}.
RelationalMatrix sample_matrix_normal(int m, const SeparableCovariance& cov,
                                      RngStream& rng);

/// Matrix-t draw: a matrix normal draw divided by sqrt(W), W ~ chi2(dof)/dof,
/// one mixing scalar per matrix.
RelationalMatrix sample_matrix_t(int m, const SeparableCovariance& cov,
                                 double dof, RngStream& rng);

/// tr[sigma_r^-1 Y sigma_c^-1 Y^t] + m log|sigma_r| + m log|sigma_c|, i.e.
/// -2 log p(Y) - m^2 log(2 pi).
double scaled_log_likelihood(const RelationalMatrix& y,
                             const SeparableCovariance& cov);

/// Exchangeable correlation (1 - rho) I + rho 11^t.
Matrix exchangeable_correlation(int m, double rho);

}  // namespace matlrt
