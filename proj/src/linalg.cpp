#include "matlrt/linalg.hpp"

#include <cmath>
#include <string>

namespace matlrt::linalg {

double SymmetricFactor::log_det() const {
  return eigenvalues.array().log().sum();
}

Matrix SymmetricFactor::sqrt() const {
  return eigenvectors * eigenvalues.array().sqrt().matrix().asDiagonal() *
         eigenvectors.transpose();
}

Matrix SymmetricFactor::inverse() const {
  return eigenvectors * eigenvalues.array().inverse().matrix().asDiagonal() *
         eigenvectors.transpose();
}

Matrix SymmetricFactor::inverse_sqrt() const {
  return eigenvectors *
         eigenvalues.array().rsqrt().matrix().asDiagonal() *
         eigenvectors.transpose();
}

SymmetricFactor factor_spd(const Matrix& a, double floor, const char* what) {
  if (a.rows() != a.cols()) {
    throw DataError(std::string(what) + " is not square");
  }
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError(std::string("eigendecomposition failed for ") + what);
  }
  const Vector& ev = solver.eigenvalues();
  if (!ev.allFinite()) {
    throw NumericalError(std::string(what) + " has non-finite eigenvalues");
  }
  const double scale = std::max(1.0, ev.maxCoeff());
  if (ev.minCoeff() <= floor * scale) {
    throw NumericalError(std::string(what) +
                         " is not positive definite (smallest eigenvalue " +
                         std::to_string(ev.minCoeff()) + ")");
  }
  return SymmetricFactor{ev, solver.eigenvectors()};
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Vector singular_values(const Matrix& y) {
  Eigen::BDCSVD<Matrix> svd(y);
  return svd.singularValues();
}

double checked_log_det_gram(const Matrix& y) {
  const Vector sv = singular_values(y);
  const double largest = sv(0);
  const double smallest = sv(sv.size() - 1);
  if (!(largest > 0.0) || smallest / largest < kRankThreshold) {
    throw NumericalError("data matrix is rank deficient (condition ratio " +
                         std::to_string(largest > 0 ? smallest / largest : 0.0) +
                         ")");
  }
  const auto m = static_cast<double>(y.rows());
  return 2.0 * sv.array().log().sum() - m * std::log(m);
}

void check_full_rank(const Matrix& y) {
  const Eigen::ColPivHouseholderQR<Matrix> qr(y);
  const Vector r = qr.matrixQR().diagonal().cwiseAbs();
  const double largest = r(0);
  const double smallest = r(r.size() - 1);
  if (!(largest > 0.0) || !std::isfinite(largest) || smallest / largest < kRankThreshold) {
    throw NumericalError("data matrix is rank deficient (condition ratio " +
                         std::to_string(largest > 0 ? smallest / largest : 0.0) + ")");
  }
}

CholeskyFactor factor_cholesky(const Matrix& a, double floor, const char* what) {
  const Eigen::LLT<Matrix> llt(0.5 * (a + a.transpose()));
  const Vector pivots = llt.matrixLLT().diagonal().cwiseAbs2();
  if (llt.info() != Eigen::Success || !pivots.allFinite() ||
      pivots.minCoeff() <= floor * std::max(1.0, pivots.maxCoeff())) {
    throw NumericalError(std::string(what) + " is not positive definite");
  }
  const auto n = a.rows();
  Matrix inverse_l = llt.matrixL().solve(Matrix::Identity(n, n));
  return CholeskyFactor{std::move(inverse_l), pivots.array().log().sum()};
}

}  // namespace matlrt::linalg
