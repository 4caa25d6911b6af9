#pragma once

#include "matlrt/core.hpp"

// Dense helpers shared by the estimators and samplers. Symmetric inputs are
// handled through eigendecomposition so that an indefinite or nearly
// singular matrix is reported by its smallest eigenvalue.
namespace matlrt::linalg {

// Smallest admissible eigenvalue of a covariance iterate, relative to the
// largest one.
inline constexpr double kEigenFloor = 1e-12;

// Smallest admissible singular value ratio for a data matrix.
inline constexpr double kRankThreshold = 1e-10;

struct SymmetricFactor {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // columns

  double log_det() const;
  Matrix sqrt() const;
  Matrix inverse() const;
  Matrix inverse_sqrt() const;
};

/// Symmetrizes `a` and factors it. Throws NumericalError if any eigenvalue is
/// <= floor * max(1, largest eigenvalue) or is not finite.
SymmetricFactor factor_spd(const Matrix& a, double floor = kEigenFloor,
                           const char* what = "matrix");

bool is_symmetric(const Matrix& a, double rel_tol = 1e-12);

/// Singular values of a square matrix, descending.
Vector singular_values(const Matrix& y);

/// Throws NumericalError when sigma_min / sigma_max < kRankThreshold.
/// Returns log|Y Y^t / m| on success.
double checked_log_det_gram(const Matrix& y);

/// Same rank criterion from a column-pivoted QR (|r_mm| / |r_11|); cheaper
/// than the SVD when the log determinant is not needed.
void check_full_rank(const Matrix& y);

/// Lower Cholesky factor L with A = L L^t, its inverse, and log|A|.
struct CholeskyFactor {
  Matrix inverse_l;  // lower triangular
  double log_det;
};

/// Throws NumericalError under the same floor as factor_spd (applied to the
/// squared pivots).
CholeskyFactor factor_cholesky(const Matrix& a, double floor, const char* what);

}  // namespace matlrt::linalg
