#pragma once

#include <functional>
#include <span>
#include <vector>

#include "matlrt/core.hpp"
#include "matlrt/lrt.hpp"

namespace matlrt {

/// Directed binary network. `diagonal_meaningful` is true when self ties are
/// observable (e.g. self-binding proteins).
class BinaryNetwork {
public:
  explicit BinaryNetwork(Matrix a, bool diagonal_meaningful = true);

  int m() const { return static_cast<int>(a_.rows()); }
  const Matrix& a() const { return a_; }
  bool diagonal_meaningful() const { return diagonal_meaningful_; }
  /// Fraction of ones among the observable entries.
  double density() const;

private:
  Matrix a_;
  bool diagonal_meaningful_;
};

/// One state of the probit eigenmodel a_ij = 1[y_ij > gamma],
/// y_ij = u_i^t v_j + e_ij, e_ij ~ N(0, 1).
struct EigenmodelState {
  int iteration = 0;
  Matrix y;
  Matrix u;  // m x R
  Matrix v;  // m x R
  double gamma = 0.0;

  /// Y - U V^t.
  Matrix residual() const;
};

struct GibbsOptions {
  int rank = 0;
  int n_iter = 10000;
  int burn_in = 5000;
  int thin = 25;
  /// Hold gamma at the probit quantile matching the observed density.
  bool fix_gamma = false;
  double factor_prior_var = 10.0;
  double gamma_prior_var = 100.0;
};

/// Gibbs sampler. Each sweep updates Y (truncated normals), the rows of U,
/// the rows of V, and gamma unless fixed. Returns the states retained after
/// burn-in at the thinning interval. `on_sweep`, when set, sees every state.
std::vector<EigenmodelState> gibbs_fit(
    const BinaryNetwork& net, const GibbsOptions& options, RngStream& rng,
    const std::function<void(const EigenmodelState&)>& on_sweep = {});

/// Draw from N(mean, 1) restricted to (threshold, inf) when `above`, else to
/// (-inf, threshold].
double truncated_normal(double mean, double threshold, bool above, RngStream& rng);

/// Simulate a network from the eigenmodel with planted factors.
BinaryNetwork sample_network(const Matrix& u, const Matrix& v, double gamma,
                             bool diagonal_meaningful, RngStream& rng);

struct FuzzyDraw {
  int iteration = 0;
  double statistic = 0.0;
  double p_value = 1.0;
};

struct FuzzyPValueSample {
  std::vector<FuzzyDraw> draws;
};

/// Test statistic and Monte Carlo p-value of Y - U V^t for every state,
/// against a sorted null sample. With `missing_diagonal` the residual
/// diagonal is zero-filled (the null sample must match).
FuzzyPValueSample fuzzy_p_values(std::span<const EigenmodelState> states,
                                 std::span<const double> null_sample,
                                 bool missing_diagonal, int workers = 0);

/// Same, simulating or loading the single-matrix null described by `spec`.
FuzzyPValueSample fuzzy_p_values(std::span<const EigenmodelState> states, TestSpec spec,
                                 const QuantileCache* cache = nullptr, int workers = 0);

}  // namespace matlrt
