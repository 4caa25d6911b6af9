#include "matlrt/meanmodel.hpp"

#include <cmath>

namespace matlrt {

DyadicDesign::DyadicDesign(int m, int p) : m_(m), p_(p), x_(Matrix(Eigen::Index{m} * m * p, 0)) {
  if (m < 2 || p < 1) throw DataError("design needs m >= 2 and p >= 1");
}

DyadicDesign::DyadicDesign(int m, int p, Matrix x, std::vector<std::string> names)
    : DyadicDesign(m, p) {
  if (x.rows() != x_.rows()) {
    throw DataError("design has " + std::to_string(x.rows()) + " rows, expected " +
                    std::to_string(x_.rows()));
  }
  if (names.empty()) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) names.push_back("x_" + std::to_string(c + 1));
  }
  if (static_cast<Eigen::Index>(names.size()) != x.cols()) {
    throw DataError("design column names do not match its width");
  }
  x_ = std::move(x);
  names_ = std::move(names);
}

void DyadicDesign::append(const Vector& column, std::string name) {
  x_.conservativeResize(Eigen::NoChange, x_.cols() + 1);
  x_.col(x_.cols() - 1) = column;
  names_.push_back(std::move(name));
}

DyadicDesign& DyadicDesign::add_intercept() {
  append(Vector::Ones(x_.rows()), "intercept");
  return *this;
}

DyadicDesign& DyadicDesign::add_sender(const Matrix& values, std::string name) {
  if (values.rows() != m_ || values.cols() != p_) throw DataError("sender feature must be m x p");
  Vector col(x_.rows());
  for (int k = 0; k < p_; ++k)
    for (int j = 0; j < m_; ++j)
      for (int i = 0; i < m_; ++i) col(row(m_, i, j, k)) = values(i, k);
  append(col, std::move(name));
  return *this;
}

DyadicDesign& DyadicDesign::add_receiver(const Matrix& values, std::string name) {
  if (values.rows() != m_ || values.cols() != p_) throw DataError("receiver feature must be m x p");
  Vector col(x_.rows());
  for (int k = 0; k < p_; ++k)
    for (int j = 0; j < m_; ++j)
      for (int i = 0; i < m_; ++i) col(row(m_, i, j, k)) = values(j, k);
  append(col, std::move(name));
  return *this;
}

DyadicDesign& DyadicDesign::add_dyadic(std::span<const Matrix> values, std::string name) {
  if (static_cast<int>(values.size()) != p_) throw DataError("dyadic feature needs one matrix per replicate");
  Vector col(x_.rows());
  for (int k = 0; k < p_; ++k) {
    if (values[k].rows() != m_ || values[k].cols() != m_) throw DataError("dyadic feature must be m x m");
    col.segment(Eigen::Index{k} * m_ * m_, Eigen::Index{m_} * m_) =
        values[k].reshaped();
  }
  append(col, std::move(name));
  return *this;
}

ResidualStack ols_demean(std::span<const RelationalMatrix> ys, const DyadicDesign& design) {
  if (ys.empty()) throw DataError("no data matrices");
  const int m = design.m();
  const int p = design.p();
  if (static_cast<int>(ys.size()) != p) {
    throw DataError("design has " + std::to_string(p) + " replicates but data has " +
                    std::to_string(ys.size()));
  }
  for (const auto& y : ys) {
    if (y.m() != m) throw DataError("data dimension does not match design");
  }

  // Regression rows: every entry except undefined diagonals.
  std::vector<Eigen::Index> rows;
  rows.reserve(static_cast<std::size_t>(design.x().rows()));
  for (int k = 0; k < p; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        if (i != j || ys[k].diagonal_defined()) rows.push_back(DyadicDesign::row(m, i, j, k));

  const auto n = static_cast<Eigen::Index>(rows.size());
  const int px = design.p_x();
  Matrix x(n, px);
  Vector y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index full = rows[r];
    x.row(r) = design.x().row(full);
    const Eigen::Index k = full / (Eigen::Index{m} * m);
    y(r) = ys[k].entries().reshaped()(full - k * m * m);
  }

  ResidualStack out;
  out.n_rows = n;
  Vector fitted = Vector::Zero(n);
  if (px > 0) {
    if (n <= px) throw DataError("design has more columns than usable rows");
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    if (qr.rank() < px) throw DataError("design matrix is rank deficient");
    out.beta_hat = qr.solve(y);
    fitted = x * out.beta_hat;
    const Vector resid = y - fitted;
    out.sigma2 = resid.squaredNorm() / static_cast<double>(n - px);
    const Matrix xtx_inv = (x.transpose() * x).ldlt().solve(Matrix::Identity(px, px));
    out.beta_se = (out.sigma2 * xtx_inv.diagonal()).cwiseSqrt();
  } else {
    out.beta_hat = Vector(0);
    out.beta_se = Vector(0);
    out.sigma2 = y.squaredNorm() / static_cast<double>(n);
  }

  std::vector<Matrix> resid;
  resid.reserve(ys.size());
  for (const auto& yk : ys) resid.push_back(yk.entries());
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index full = rows[r];
    const Eigen::Index k = full / (Eigen::Index{m} * m);
    resid[k].reshaped()(full - k * m * m) = y(r) - fitted(r);
  }
  out.residuals.reserve(ys.size());
  for (int k = 0; k < p; ++k) out.residuals.emplace_back(std::move(resid[k]), ys[k].diagonal_defined());
  return out;
}

TestResult trade_workflow(std::span<const RelationalMatrix> ys, const DyadicDesign& design,
                          TestSpec spec, const QuantileCache* cache, int workers) {
  const ResidualStack demeaned = ols_demean(ys, design);
  std::vector<RelationalMatrix> filled;
  filled.reserve(demeaned.residuals.size());
  for (const auto& e : demeaned.residuals) filled.push_back(e.with_missing_diagonal());
  spec.missing_diagonal = true;
  spec.heteroscedastic = true;
  TestResult result = run_test(filled, spec, cache, workers);
  result.approximate_null = true;
  return result;
}

TradePanel simulate_trade_panel(int m, int p, double beta_sender, double beta_receiver,
                                const SeparableCovariance& cov, const Vector& scales,
                                RngStream& rng) {
  if (scales.size() != p || !(scales.array() > 0).all()) {
    throw DataError("need one positive scale per replicate");
  }
  // Year-on-year log GDP changes: a common year effect plus country noise.
  Matrix x(m, p);
  for (int k = 0; k < p; ++k) {
    const double year = 0.02 + 0.02 * rng.normal();
    for (int i = 0; i < m; ++i) x(i, k) = year + 0.03 * rng.normal();
  }
  std::vector<RelationalMatrix> ys;
  ys.reserve(p);
  for (int k = 0; k < p; ++k) {
    Matrix e = sample_matrix_normal(m, cov, rng).entries() * std::sqrt(scales(k));
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) e(i, j) += beta_sender * x(i, k) + beta_receiver * x(j, k);
    ys.emplace_back(std::move(e), false);
  }
  DyadicDesign design(m, p);
  design.add_sender(x, "gdp_exporter").add_receiver(x, "gdp_importer");
  return TradePanel{std::move(ys), std::move(x), std::move(design)};
}

}  // namespace matlrt
