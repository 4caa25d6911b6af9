#include "matlrt/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "matlrt/linalg.hpp"

namespace matlrt {

namespace {

int common_dimension(std::span<const RelationalMatrix> ys) {
  if (ys.empty()) throw DataError("at least one replicate is required");
  const int m = ys.front().m();
  for (const auto& y : ys) {
    if (y.m() != m) {
      throw DataError("replicates have different dimensions (" +
                      std::to_string(m) + " vs " + std::to_string(y.m()) + ")");
    }
  }
  return m;
}

void check_full_rank(std::span<const RelationalMatrix> ys) {
  for (const auto& y : ys) linalg::check_full_rank(y.entries());
}

bool has_converged(double previous, double current, double param_change,
                   const FitOptions& options) {
  const double rel = (previous - current) / std::max(1.0, std::abs(current));
  return rel < options.tol && param_change < options.param_tol;
}

struct DiagonalState {
  Vector d_r, d_c, d_obs;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

// Block coordinate descent over (D_r, D_c[, d_1..d_p]) using only the squared
// entries of the data: (Y D_c^-1 Y^t)_ii = sum_j y_ij^2 / d_c,j.
DiagonalState fit_diagonal(std::span<const RelationalMatrix> ys,
                           bool heteroscedastic, const FitOptions& options) {
  const int m = common_dimension(ys);
  const auto p = static_cast<int>(ys.size());
  check_full_rank(ys);

  std::vector<Matrix> squares;
  squares.reserve(ys.size());
  for (const auto& y : ys) squares.push_back(y.entries().cwiseAbs2());

  const double md = m;
  const double mp = md * p;

  DiagonalState s;
  s.d_c = options.initial_dc ? *options.initial_dc : Vector::Ones(m);
  if (s.d_c.size() != m || !(s.d_c.array() > 0).all()) {
    throw DataError("initial column variances must be positive with length m");
  }
  s.d_r = Vector::Ones(m);
  s.d_obs = Vector::Ones(p);

  Vector log_prev = Vector::Zero(2 * m + p);
  double previous = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= options.max_iter; ++it) {
    Vector inv_dc = s.d_c.cwiseInverse();
    Vector acc = Vector::Zero(m);
    for (int k = 0; k < p; ++k) acc += squares[k] * inv_dc / s.d_obs(k);
    s.d_r = acc / mp;

    Vector inv_dr = s.d_r.cwiseInverse();
    acc.setZero();
    for (int k = 0; k < p; ++k) acc += squares[k].transpose() * inv_dr / s.d_obs(k);
    s.d_c = acc / mp;
    inv_dc = s.d_c.cwiseInverse();

    Vector traces(p);
    for (int k = 0; k < p; ++k) traces(k) = inv_dr.dot(squares[k] * inv_dc);
    if (heteroscedastic) s.d_obs = traces / (md * md);

    // Normalize: prod(d_r) = 1 and d_obs[0] = 1, both absorbed into d_c.
    const double gr = std::exp(s.d_r.array().log().mean());
    s.d_r /= gr;
    s.d_c *= gr;
    const double g0 = s.d_obs(0);
    s.d_obs /= g0;
    s.d_c *= g0;

    if (!s.d_r.allFinite() || !s.d_c.allFinite() || !(s.d_r.array() > 0).all() ||
        !(s.d_c.array() > 0).all()) {
      throw NumericalError("diagonal fit produced non-positive variances");
    }

    inv_dr = s.d_r.cwiseInverse();
    inv_dc = s.d_c.cwiseInverse();
    double trace = 0.0;
    for (int k = 0; k < p; ++k) trace += inv_dr.dot(squares[k] * inv_dc) / s.d_obs(k);
    const double objective =
        trace + mp * (s.d_r.array().log().sum() + s.d_c.array().log().sum()) +
        md * md * s.d_obs.array().log().sum();
    s.history.push_back(objective);

    Vector log_now(2 * m + p);
    log_now << s.d_r.array().log().matrix(), s.d_c.array().log().matrix(),
        s.d_obs.array().log().matrix();
    const double param_change =
        it == 1 ? std::numeric_limits<double>::infinity()
                : (log_now - log_prev).cwiseAbs().maxCoeff();
    log_prev = log_now;

    s.iterations = it;
    s.objective = objective;
    if (has_converged(previous, objective, param_change, options)) {
      s.converged = true;
      break;
    }
    previous = objective;
  }
  return s;
}

}  // namespace

FullFitResult fit_full(const RelationalMatrix& y) {
  const double log_det = linalg::checked_log_det_gram(y.entries());
  const int m = y.m();
  const double md = m;
  Matrix sigma_r = y.entries() * y.entries().transpose() / md;
  sigma_r = 0.5 * (sigma_r + sigma_r.transpose());
  return FullFitResult{SeparableCovariance(std::move(sigma_r), Matrix::Identity(m, m)),
                       md * md + md * log_det};
}

NullFitResult fit_null(const RelationalMatrix& y, const FitOptions& options) {
  DiagonalState s = fit_diagonal(std::span(&y, 1), false, options);
  return NullFitResult{DiagonalCovariance(std::move(s.d_r), std::move(s.d_c)),
                       s.objective, s.iterations, s.converged, std::move(s.history)};
}

NullFitResult fit_null(const RelationalMatrix& y, double tol, int max_iter) {
  FitOptions options;
  options.tol = tol;
  options.max_iter = max_iter;
  return fit_null(y, options);
}

HeteroFitResult fit_null_replicates(std::span<const RelationalMatrix> ys,
                                    bool heteroscedastic,
                                    const FitOptions& options) {
  DiagonalState s = fit_diagonal(ys, heteroscedastic, options);
  return HeteroFitResult{std::move(s.d_obs),
                         DiagonalCovariance(std::move(s.d_r), std::move(s.d_c)),
                         s.objective, s.iterations, s.converged, std::move(s.history)};
}

HeteroFitResult fit_full_replicates(std::span<const RelationalMatrix> ys,
                                    bool heteroscedastic,
                                    const FitOptions& options) {
  const int m = common_dimension(ys);
  const auto p = static_cast<int>(ys.size());
  const double md = m;
  const double mp = md * p;

  if (p == 1) {
    const FullFitResult full = fit_full(ys.front());
    const double scale = std::exp(
        linalg::factor_spd(full.cov.sigma_r(), 0.0, "sigma_r").log_det() / md);
    return HeteroFitResult{
        Vector::Ones(1),
        SeparableCovariance(full.cov.sigma_r() / scale, full.cov.sigma_c() * scale),
        full.scaled_loglik, 0, true, {full.scaled_loglik}};
  }
  check_full_rank(ys);

  Matrix sigma_r = Matrix::Identity(m, m);
  Matrix sigma_c = Matrix::Identity(m, m);
  Vector d = Vector::Ones(p);

  HeteroFitResult result;
  double previous = std::numeric_limits<double>::infinity();
  Matrix stacked(m, m * p);

  for (int it = 1; it <= options.max_iter; ++it) {
    const Matrix prev_r = sigma_r;
    const Matrix prev_c = sigma_c;
    const Vector prev_d = d;

    // With Sigma = L L^t, (Y L^-t)(Y L^-t)^t = Y Sigma^-1 Y^t.
    const Matrix wc = linalg::factor_cholesky(sigma_c, linalg::kEigenFloor, "sigma_c").inverse_l;
    for (int k = 0; k < p; ++k) {
      stacked.middleCols(k * m, m).noalias() = ys[k].entries() * wc.transpose() / std::sqrt(d(k));
    }
    sigma_r.noalias() = stacked * stacked.transpose() / mp;

    const auto fr = linalg::factor_cholesky(sigma_r, linalg::kEigenFloor, "sigma_r");
    const Matrix& wr = fr.inverse_l;
    for (int k = 0; k < p; ++k) {
      stacked.middleCols(k * m, m).noalias() = ys[k].entries().transpose() * wr.transpose() / std::sqrt(d(k));
    }
    sigma_c.noalias() = stacked * stacked.transpose() / mp;

    auto fc = linalg::factor_cholesky(sigma_c, linalg::kEigenFloor, "sigma_c");
    if (heteroscedastic) {
      for (int k = 0; k < p; ++k) {
        d(k) = (wr * ys[k].entries() * fc.inverse_l.transpose()).squaredNorm() / (md * md);
      }
    }

    // Normalize: |Sigma_r| = 1 and d[0] = 1, absorbed into Sigma_c.
    const double log_det_r = fr.log_det;
    const double gr = std::exp(log_det_r / md);
    sigma_r /= gr;
    const double g0 = d(0);
    d /= g0;
    sigma_c *= gr * g0;
    sigma_c = 0.5 * (sigma_c + sigma_c.transpose());
    const double log_det_c = fc.log_det + md * std::log(gr * g0);

    // Each block update leaves the trace term at exactly m^2 p.
    const double objective = md * md * p + mp * log_det_c +
                             md * md * d.array().log().sum();
    result.history.push_back(objective);

    double param_change = std::numeric_limits<double>::infinity();
    if (it > 1) {
      param_change = std::max(
          {(sigma_r - prev_r).norm() / sigma_r.norm(),
           (sigma_c - prev_c).norm() / sigma_c.norm(),
           (d.array().log() - prev_d.array().log()).abs().maxCoeff()});
    }
    result.iterations = it;
    result.scaled_loglik = objective;
    if (has_converged(previous, objective, param_change, options)) {
      result.converged = true;
      break;
    }
    previous = objective;
  }

  result.d_obs = d;
  result.cov = SeparableCovariance(0.5 * (sigma_r + sigma_r.transpose()), sigma_c);
  return result;
}

double replicate_scaled_log_likelihood(std::span<const RelationalMatrix> ys,
                                       const Vector& d_obs,
                                       const SeparableCovariance& cov) {
  const int m = common_dimension(ys);
  const auto p = static_cast<int>(ys.size());
  if (d_obs.size() != p || !(d_obs.array() > 0).all()) {
    throw DataError("replicate scales must be positive with one entry per replicate");
  }
  if (cov.m() != m) throw DataError("covariance dimension does not match data");
  const auto fr = linalg::factor_spd(cov.sigma_r(), linalg::kEigenFloor, "sigma_r");
  const auto fc = linalg::factor_spd(cov.sigma_c(), linalg::kEigenFloor, "sigma_c");
  const Matrix wr = fr.inverse_sqrt();
  const Matrix wc = fc.inverse_sqrt();
  const double md = m;
  double trace = 0.0;
  for (int k = 0; k < p; ++k) trace += (wr * ys[k].entries() * wc).squaredNorm() / d_obs(k);
  return trace + md * p * (fr.log_det() + fc.log_det()) +
         md * md * d_obs.array().log().sum();
}

}  // namespace matlrt
