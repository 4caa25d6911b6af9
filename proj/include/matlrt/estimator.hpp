#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "matlrt/core.hpp"

namespace matlrt {

/// Stopping rule shared by the iterative fits. An iteration counts as
/// converged when the relative decrease of the scaled log likelihood is
/// below `tol` and the largest change of the normalized parameters is below
/// `param_tol`.
struct FitOptions {
  double tol = 1e-10;
  double param_tol = 1e-9;
  int max_iter = 1000;
  /// Starting column variances for the diagonal fits; identity if unset.
  std::optional<Vector> initial_dc;
};

struct NullFitResult {
  DiagonalCovariance d;  // normalized so that prod(d_r) == 1
  double scaled_loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // objective after each full sweep
};

struct FullFitResult {
  SeparableCovariance cov;
  double scaled_loglik = 0.0;
};

/// Fit for a stack of replicates Y_i ~ N(0, d_i Sigma_r, Sigma_c).
/// Normalization: d_obs[0] == 1 and log|Sigma_r| == 0 (prod(d_r) == 1).
struct HeteroFitResult {
  Vector d_obs;
  std::variant<SeparableCovariance, DiagonalCovariance> cov;
  double scaled_loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

/// Unrestricted MLE. Returns the canonical representative
/// (Y Y^t / m, I); any (Y S^-1 Y^t / m, S) attains the same likelihood.
FullFitResult fit_full(const RelationalMatrix& y);

/// Null (diagonal) MLE by alternating the two diagonal likelihood equations,
/// starting from D_c = I.
NullFitResult fit_null(const RelationalMatrix& y, const FitOptions& options = {});

NullFitResult fit_null(const RelationalMatrix& y, double tol, int max_iter);

/// Diagonal fit for p replicates; heteroscedastic adds per-replicate scales.
HeteroFitResult fit_null_replicates(std::span<const RelationalMatrix> ys,
                                    bool heteroscedastic,
                                    const FitOptions& options = {});

/// Unrestricted fit for p replicates. p == 1 uses the closed form; p >= 2
/// runs the flip-flop iteration to a stationary point.
HeteroFitResult fit_full_replicates(std::span<const RelationalMatrix> ys,
                                    bool heteroscedastic,
                                    const FitOptions& options = {});

/// Replicate objective
///   sum_i tr[Sr^-1 Y_i Sc^-1 Y_i^t] / d_i + mp log|Sr| + mp log|Sc|
///   + m^2 sum_i log d_i.
double replicate_scaled_log_likelihood(std::span<const RelationalMatrix> ys,
                                       const Vector& d_obs,
                                       const SeparableCovariance& cov);

}  // namespace matlrt
