#pragma once

// Shared helpers for the test binaries: random inputs, small statistics, and
// independent reference computations (dense Kronecker algebra and generic
// numerical optimizers from GSL) used as oracles for the library.

#include <functional>
#include <span>
#include <vector>

#include "matlrt/core.hpp"

namespace testing {

using matlrt::Matrix;
using matlrt::RelationalMatrix;
using matlrt::RngStream;
using matlrt::Vector;

Matrix random_matrix(int rows, int cols, RngStream& rng);
RelationalMatrix random_relational(int m, RngStream& rng);
/// Positive diagonal entries, log-uniform on [1/range, range].
Vector random_positive(int n, RngStream& rng, double range = 5.0);
/// Random SPD matrix with eigenvalues in [0.5, 2.5].
Matrix random_spd(int m, RngStream& rng);

/// -2 log density - m^2 log(2 pi) of vec(Y) ~ N(0, sigma_c (x) sigma_r),
/// evaluated with the explicit m^2 x m^2 covariance.
double dense_mvn_scaled_loglik(const Matrix& y, const Matrix& sigma_r, const Matrix& sigma_c);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b);

/// Exact central 99% acceptance interval for the number of rejections out
/// of n independent level-`alpha` tests.
struct CountInterval {
  long lo;
  long hi;
  bool contains(long k) const { return lo <= k && k <= hi; }
};
CountInterval binomial_interval(long n, double alpha, double coverage = 0.99);

/// Pearson correlation of two equally sized arrays.
double correlation(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Optimizer oracles. They minimize the scaled log likelihood directly with a
// quasi-Newton method and share no code with the library's fitters.

struct Minimum {
  Vector x;
  double value;
};

/// BFGS (GSL vector_bfgs2). `grad` may be empty, in which case central
/// differences are used.
Minimum minimize(const std::function<double(const Vector&)>& f,
                 const std::function<Vector(const Vector&)>& grad, Vector x0,
                 double grad_tol = 1e-11, int max_iter = 20000);

/// Diagonal-model minimum over log variances, normalized so that
/// sum(log d_r) = 0 and log d_obs[0] = 0. Objective:
///   sum_k sum_ij y_ijk^2 / (d_r,i d_c,j d_k) + mp sum log d_r + mp sum log d_c
///   + m^2 sum log d_k.
struct DiagonalOptimum {
  Vector d_r;
  Vector d_c;
  Vector d_obs;
  double value;
};
DiagonalOptimum diagonal_optimum(std::span<const RelationalMatrix> ys, bool heteroscedastic);

/// Unrestricted separable minimum over Cholesky factors (best of several
/// starts). Returns the objective value only.
double separable_optimum(std::span<const RelationalMatrix> ys, bool heteroscedastic,
                         RngStream& rng, int starts = 6);

}  // namespace testing
