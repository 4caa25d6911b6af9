#include "matlrt/eigenmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "matlrt/parallel.hpp"

namespace matlrt {

namespace {

// Below this standardized bound plain rejection from N(0, 1) accepts with
// probability >= 1/3; above it the exponential proposal is used.
constexpr double kRejectionSwitch = 0.45;

// z ~ N(0, 1) conditioned on z > lower.
double lower_truncated_standard(double lower, RngStream& rng) {
  if (lower < kRejectionSwitch) {
    for (;;) {
      const double z = rng.normal();
      if (z > lower) return z;
    }
  }
  const double alpha = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (;;) {
    const double u = rng.uniform();
    if (u <= 0.0) continue;
    const double z = lower - std::log(u) / alpha;
    const double accept = std::exp(-0.5 * (z - alpha) * (z - alpha));
    if (rng.uniform() < accept && z > lower) return z;
  }
}

bool observed(const BinaryNetwork& net, int i, int j) {
  return i != j || net.diagonal_meaningful();
}

// Rounding in mean + z can land on the threshold; pin such entries to the
// nearest admissible value so that 1[y > gamma] == a holds exactly.
void enforce_signs(const BinaryNetwork& net, Matrix& y, double gamma) {
  const int m = net.m();
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      if (!observed(net, i, j)) continue;
      if (net.a()(i, j) > 0.5) {
        if (!(y(i, j) > gamma)) y(i, j) = std::nextafter(gamma, std::numeric_limits<double>::infinity());
      } else if (y(i, j) > gamma) {
        y(i, j) = gamma;
      }
    }
  }
}

// Draws the rows of `factor` given y ~ other-side factor: row i of y equals
// other * factor_i + noise, prior N(0, prior_var I).
Matrix draw_factor_rows(const Matrix& y, const Matrix& other, double prior_var,
                        RngStream& rng) {
  const auto r = other.cols();
  Matrix precision = other.transpose() * other;
  precision.diagonal().array() += 1.0 / prior_var;
  const Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("factor posterior precision is not positive definite");
  Matrix mean = llt.solve(other.transpose() * y.transpose());  // r x m
  Matrix z(r, y.rows());
  for (Eigen::Index k = 0; k < z.size(); ++k) z.data()[k] = rng.normal();
  return (mean + llt.matrixU().solve(z)).transpose();
}

}  // namespace

BinaryNetwork::BinaryNetwork(Matrix a, bool diagonal_meaningful)
    : a_(std::move(a)), diagonal_meaningful_(diagonal_meaningful) {
  if (a_.rows() != a_.cols() || a_.rows() < 2) {
    throw DataError("adjacency matrix must be square with at least two nodes");
  }
  if (!((a_.array() == 0.0) || (a_.array() == 1.0)).all()) {
    throw DataError("adjacency entries must be 0 or 1");
  }
  if (!diagonal_meaningful_) a_.diagonal().setZero();
}

double BinaryNetwork::density() const {
  const double m = a_.rows();
  if (diagonal_meaningful_) return a_.sum() / (m * m);
  return a_.sum() / (m * (m - 1));
}

Matrix EigenmodelState::residual() const {
  if (u.cols() == 0) return y;
  return y - u * v.transpose();
}

double truncated_normal(double mean, double threshold, bool above, RngStream& rng) {
  const double a = threshold - mean;
  if (above) return mean + lower_truncated_standard(a, rng);
  // z <= a  <=>  -z >= -a; the boundary itself has probability zero.
  return mean - lower_truncated_standard(-a, rng);
}

std::vector<EigenmodelState> gibbs_fit(
    const BinaryNetwork& net, const GibbsOptions& options, RngStream& rng,
    const std::function<void(const EigenmodelState&)>& on_sweep) {
  const int m = net.m();
  const int rank = options.rank;
  if (rank < 0 || rank >= m) throw DataError("rank must satisfy 0 <= R < m");
  if (options.n_iter <= options.burn_in || options.burn_in < 0) {
    throw DataError("n_iter must exceed burn_in");
  }
  if (options.thin < 1) throw DataError("thin must be positive");
  if (!(options.factor_prior_var > 0.0) || !(options.gamma_prior_var > 0.0)) {
    throw DataError("prior variances must be positive");
  }

  const double n_obs = static_cast<double>(m) * m - (net.diagonal_meaningful() ? 0.0 : m);
  const double clipped = std::clamp(net.density(), 0.5 / n_obs, 1.0 - 0.5 / n_obs);

  EigenmodelState s;
  s.gamma = boost::math::quantile(boost::math::normal(), 1.0 - clipped);
  s.u = Matrix(m, rank);
  s.v = Matrix(m, rank);
  for (Eigen::Index k = 0; k < s.u.size(); ++k) s.u.data()[k] = 0.1 * rng.normal();
  for (Eigen::Index k = 0; k < s.v.size(); ++k) s.v.data()[k] = 0.1 * rng.normal();
  s.y = Matrix::Zero(m, m);

  std::vector<EigenmodelState> kept;
  kept.reserve(static_cast<std::size_t>((options.n_iter - options.burn_in) / options.thin));

  for (int it = 1; it <= options.n_iter; ++it) {
    const Matrix mean = rank > 0 ? Matrix(s.u * s.v.transpose()) : Matrix::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        s.y(i, j) = observed(net, i, j)
                        ? truncated_normal(mean(i, j), s.gamma, net.a()(i, j) > 0.5, rng)
                        : mean(i, j) + rng.normal();
      }
    }
    enforce_signs(net, s.y, s.gamma);

    if (rank > 0) {
      s.u = draw_factor_rows(s.y, s.v, options.factor_prior_var, rng);
      s.v = draw_factor_rows(s.y.transpose(), s.u, options.factor_prior_var, rng);
    }

    if (!options.fix_gamma) {
      // Gibbs step for gamma in the parametrization z = y - gamma, whose sign
      // constraints do not involve gamma; y is translated along with it.
      const Matrix fitted = rank > 0 ? Matrix(s.u * s.v.transpose()) : Matrix::Zero(m, m);
      const Matrix z = s.y.array() - s.gamma;
      const double total = static_cast<double>(m) * m;
      const double precision = total + 1.0 / options.gamma_prior_var;
      const double center = (fitted - z).sum() / precision;
      s.gamma = center + rng.normal() / std::sqrt(precision);
      s.y = z.array() + s.gamma;
      enforce_signs(net, s.y, s.gamma);
    }

    s.iteration = it;
    if (on_sweep) on_sweep(s);
    if (it > options.burn_in && (it - options.burn_in) % options.thin == 0) kept.push_back(s);
  }
  return kept;
}

BinaryNetwork sample_network(const Matrix& u, const Matrix& v, double gamma,
                             bool diagonal_meaningful, RngStream& rng) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) throw DataError("factor shapes differ");
  const auto m = u.rows();
  Matrix y = u.cols() > 0 ? Matrix(u * v.transpose()) : Matrix::Zero(m, m);
  y += standard_normal_matrix(static_cast<int>(m), rng);
  Matrix a = (y.array() > gamma).cast<double>();
  return BinaryNetwork(std::move(a), diagonal_meaningful);
}

FuzzyPValueSample fuzzy_p_values(std::span<const EigenmodelState> states,
                                 std::span<const double> null_sample,
                                 bool missing_diagonal, int workers) {
  if (states.empty()) throw DataError("no retained states");
  if (null_sample.empty()) throw DataError("empty null sample");
  FuzzyPValueSample out;
  out.draws.resize(states.size());
  parallel_for(states.size(), workers, [&](std::size_t i) {
    const RelationalMatrix resid(states[i].residual(), !missing_diagonal);
    const double t = statistic(resid);
    out.draws[i] = FuzzyDraw{states[i].iteration, t, p_value(null_sample, t)};
  });
  return out;
}

FuzzyPValueSample fuzzy_p_values(std::span<const EigenmodelState> states, TestSpec spec,
                                 const QuantileCache* cache, int workers) {
  if (states.empty()) throw DataError("no retained states");
  spec.m = static_cast<int>(states.front().y.rows());
  spec.p = 1;
  spec.heteroscedastic = false;
  const auto sample = cache ? cache->get_or_create(spec, workers)
                            : null_distribution(spec, workers);
  return fuzzy_p_values(states, sample, spec.missing_diagonal, workers);
}

}  // namespace matlrt
