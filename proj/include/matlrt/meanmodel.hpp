#pragma once

#include <span>
#include <string>
#include <vector>

#include "matlrt/core.hpp"
#include "matlrt/lrt.hpp"

namespace matlrt {

/// Regression design for a stack of p relational matrices. Row r of `x`
/// corresponds to entry (i, j) of replicate k with r = k m^2 + j m + i,
/// i.e. the column-major vec of each replicate stacked in order.
class DyadicDesign {
public:
  DyadicDesign(int m, int p);
  DyadicDesign(int m, int p, Matrix x, std::vector<std::string> names = {});

  int m() const { return m_; }
  int p() const { return p_; }
  int p_x() const { return static_cast<int>(x_.cols()); }
  const Matrix& x() const { return x_; }
  const std::vector<std::string>& names() const { return names_; }

  static Eigen::Index row(int m, int i, int j, int k) {
    return static_cast<Eigen::Index>(k) * m * m + static_cast<Eigen::Index>(j) * m + i;
  }

  DyadicDesign& add_intercept();
  /// Sender feature: entry (i, j, k) gets values(i, k). `values` is m x p.
  DyadicDesign& add_sender(const Matrix& values, std::string name = "sender");
  /// Receiver feature: entry (i, j, k) gets values(j, k).
  DyadicDesign& add_receiver(const Matrix& values, std::string name = "receiver");
  /// Dyadic feature: one m x m matrix per replicate.
  DyadicDesign& add_dyadic(std::span<const Matrix> values, std::string name = "dyadic");

private:
  void append(const Vector& column, std::string name);

  int m_;
  int p_;
  Matrix x_;
  std::vector<std::string> names_;
};

struct ResidualStack {
  std::vector<RelationalMatrix> residuals;
  Vector beta_hat;
  Vector beta_se;   // classical OLS standard errors
  double sigma2 = 0.0;
  Eigen::Index n_rows = 0;  // regression rows used
};

/// OLS fit of vec(Y) on the design and the residuals reshaped to matrices.
/// Entries on an undefined diagonal are excluded from the regression and
/// stay zero in the residuals.
ResidualStack ols_demean(std::span<const RelationalMatrix> ys, const DyadicDesign& design);

/// Demean, zero-fill diagonals and run the heteroscedastic replicate test
/// against the missing-diagonal null. The reported null is approximate.
TestResult trade_workflow(std::span<const RelationalMatrix> ys, const DyadicDesign& design,
                          TestSpec spec, const QuantileCache* cache = nullptr,
                          int workers = 0);

/// Synthetic panel shaped like yearly trade changes:
///   Y_ijk = beta_1 x_ik + beta_2 x_jk + e_ijk,
/// with e_k ~ N(0, scales_k * sigma_r, sigma_c) and undefined diagonals.
struct TradePanel {
  std::vector<RelationalMatrix> ys;
  Matrix node_covariate;  // m x p
  DyadicDesign design;
};

TradePanel simulate_trade_panel(int m, int p, double beta_sender, double beta_receiver,
                                const SeparableCovariance& cov, const Vector& scales,
                                RngStream& rng);

}  // namespace matlrt
