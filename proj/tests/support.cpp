#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/binomial.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace testing {

Matrix random_matrix(int rows, int cols, RngStream& rng) {
  Matrix a(rows, cols);
  for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = rng.normal();
  return a;
}

RelationalMatrix random_relational(int m, RngStream& rng) {
  return RelationalMatrix(random_matrix(m, m, rng));
}

Vector random_positive(int n, RngStream& rng, double range) {
  Vector d(n);
  const double span = std::log(range);
  for (int i = 0; i < n; ++i) d(i) = std::exp(span * (2.0 * rng.uniform() - 1.0));
  return d;
}

Matrix random_spd(int m, RngStream& rng) {
  const Eigen::HouseholderQR<Matrix> qr(random_matrix(m, m, rng));
  const Matrix q = qr.householderQ();
  Vector lambda(m);
  for (int i = 0; i < m; ++i) lambda(i) = 0.5 + 2.0 * rng.uniform();
  Matrix s = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

double dense_mvn_scaled_loglik(const Matrix& y, const Matrix& sigma_r, const Matrix& sigma_c) {
  const auto m = y.rows();
  const auto n = m * m;
  Matrix k(n, n);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      k.block(a * m, b * m, m, m) = sigma_c(a, b) * sigma_r;
  const Eigen::Map<const Vector> v(y.data(), n);
  const Eigen::LLT<Matrix> llt(k);
  const double quad = v.dot(llt.solve(v));
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double log_density = -0.5 * quad - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
  return -2.0 * log_density - n * std::log(2.0 * std::numbers::pi);
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

CountInterval binomial_interval(long n, double alpha, double coverage) {
  const boost::math::binomial dist(static_cast<double>(n), alpha);
  const double tail = 0.5 * (1.0 - coverage);
  // quantile() on a discrete distribution rounds outwards by default.
  const auto lo = static_cast<long>(boost::math::quantile(dist, tail));
  const auto hi = static_cast<long>(boost::math::quantile(boost::math::complement(dist, tail)));
  return {lo, hi};
}

double correlation(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

namespace {

struct Problem {
  const std::function<double(const Vector&)>* f;
  const std::function<Vector(const Vector&)>* grad;
};

Vector to_eigen(const gsl_vector* v) {
  Vector x(v->size);
  for (std::size_t i = 0; i < v->size; ++i) x(i) = gsl_vector_get(v, i);
  return x;
}

Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2 * h);
  }
  return g;
}

Vector eval_gradient(const Problem& p, const Vector& x) {
  return *p.grad ? (*p.grad)(x) : numeric_gradient(*p.f, x);
}

double gsl_f(const gsl_vector* v, void* params) {
  const auto* p = static_cast<const Problem*>(params);
  const double value = (*p->f)(to_eigen(v));
  return std::isfinite(value) ? value : std::numeric_limits<double>::max();
}

void gsl_df(const gsl_vector* v, void* params, gsl_vector* g) {
  const auto* p = static_cast<const Problem*>(params);
  const Vector grad = eval_gradient(*p, to_eigen(v));
  for (Eigen::Index i = 0; i < grad.size(); ++i) gsl_vector_set(g, i, grad(i));
}

void gsl_fdf(const gsl_vector* v, void* params, double* f, gsl_vector* g) {
  *f = gsl_f(v, params);
  gsl_df(v, params, g);
}

}  // namespace

Minimum minimize(const std::function<double(const Vector&)>& f,
                 const std::function<Vector(const Vector&)>& grad, Vector x0,
                 double grad_tol, int max_iter) {
  gsl_set_error_handler_off();
  Problem problem{&f, &grad};
  const auto n = static_cast<std::size_t>(x0.size());
  gsl_multimin_function_fdf fn{&gsl_f, &gsl_df, &gsl_fdf, n, &problem};

  // Restarting BFGS refreshes the Hessian approximation after a stalled line
  // search, which lets it reach the gradient tolerance more reliably.
  Vector x = std::move(x0);
  for (int restart = 0; restart < 20; ++restart) {
    gsl_vector* start = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(start, i, x(i));
    gsl_multimin_fdfminimizer* s =
        gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n);
    gsl_multimin_fdfminimizer_set(s, &fn, start, 0.01, 0.1);
    int status = GSL_CONTINUE;
    for (int it = 0; it < max_iter && status == GSL_CONTINUE; ++it) {
      if (gsl_multimin_fdfminimizer_iterate(s) != GSL_SUCCESS) break;
      status = gsl_multimin_test_gradient(s->gradient, grad_tol);
    }
    const Vector next = to_eigen(s->x);
    const bool done = status == GSL_SUCCESS || (next - x).norm() < 1e-14;
    x = next;
    gsl_multimin_fdfminimizer_free(s);
    gsl_vector_free(start);
    if (done) break;
  }
  return {x, f(x)};
}

namespace {

struct DiagonalLayout {
  int m;
  int p;
  bool hetero;
  int size() const { return (m - 1) + m + (hetero ? p - 1 : 0); }

  void unpack(const Vector& x, Vector& a, Vector& b, Vector& c) const {
    a.resize(m);
    a.head(m - 1) = x.head(m - 1);
    a(m - 1) = -x.head(m - 1).sum();
    b = x.segment(m - 1, m);
    c = Vector::Zero(p);
    if (hetero) c.tail(p - 1) = x.tail(p - 1);
  }
};

}  // namespace

DiagonalOptimum diagonal_optimum(std::span<const RelationalMatrix> ys, bool heteroscedastic) {
  const int m = ys.front().m();
  const int p = static_cast<int>(ys.size());
  const DiagonalLayout layout{m, p, heteroscedastic};
  std::vector<Matrix> sq;
  for (const auto& y : ys) sq.push_back(y.entries().array().square());

  auto weights = [&](const Vector& x, Vector& a, Vector& b, Vector& c) {
    layout.unpack(x, a, b, c);
    std::vector<Matrix> w;
    for (int k = 0; k < p; ++k) {
      Matrix wk = sq[k];
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) wk(i, j) *= std::exp(-a(i) - b(j) - c(k));
      w.push_back(std::move(wk));
    }
    return w;
  };
  const std::function<double(const Vector&)> f = [&](const Vector& x) {
    Vector a, b, c;
    const auto w = weights(x, a, b, c);
    double total = 0.0;
    for (const auto& wk : w) total += wk.sum();
    return total + m * p * (a.sum() + b.sum()) + static_cast<double>(m) * m * c.sum();
  };
  const std::function<Vector(const Vector&)> grad = [&](const Vector& x) {
    Vector a, b, c;
    const auto w = weights(x, a, b, c);
    Vector ga = Vector::Constant(m, m * p);
    Vector gb = Vector::Constant(m, m * p);
    Vector gc = Vector::Constant(p, static_cast<double>(m) * m);
    for (int k = 0; k < p; ++k) {
      ga -= w[k].rowwise().sum();
      gb -= w[k].colwise().sum().transpose();
      gc(k) -= w[k].sum();
    }
    Vector g(layout.size());
    g.head(m - 1) = ga.head(m - 1).array() - ga(m - 1);
    g.segment(m - 1, m) = gb;
    if (heteroscedastic) g.tail(p - 1) = gc.tail(p - 1);
    return g;
  };

  const Minimum best = minimize(f, grad, Vector::Zero(layout.size()));
  Vector a, b, c;
  layout.unpack(best.x, a, b, c);
  return {a.array().exp(), b.array().exp(), c.array().exp(), best.value};
}

double separable_optimum(std::span<const RelationalMatrix> ys, bool heteroscedastic,
                         RngStream& rng, int starts) {
  const int m = ys.front().m();
  const int p = static_cast<int>(ys.size());
  const int tri = m * (m + 1) / 2;
  const int size = (tri - 1) + tri + (heteroscedastic ? p - 1 : 0);

  // Lower-triangular factors with log-parametrized diagonals; the row factor
  // has unit determinant.
  auto factor = [m](const Vector& v) {
    Matrix l = Matrix::Zero(m, m);
    int k = 0;
    for (int j = 0; j < m; ++j)
      for (int i = j; i < m; ++i) l(i, j) = (i == j) ? std::exp(v(k++)) : v(k++);
    return l;
  };
  const std::function<double(const Vector&)> f = [&](const Vector& x) {
    Vector vr(tri);
    vr.head(tri - 1) = x.head(tri - 1);
    vr(tri - 1) = 0.0;
    Matrix lr = factor(vr);
    lr(m - 1, m - 1) = 1.0 / lr.diagonal().head(m - 1).prod();
    const Matrix lc = factor(x.segment(tri - 1, tri));
    Vector c = Vector::Zero(p);
    if (heteroscedastic) c.tail(p - 1) = x.tail(p - 1);

    double value = 0.0;
    for (int k = 0; k < p; ++k) {
      const Matrix left = lr.triangularView<Eigen::Lower>().solve(ys[k].entries());
      const Matrix a = lc.triangularView<Eigen::Lower>().solve(left.transpose());
      value += a.squaredNorm() * std::exp(-c(k));
    }
    const double log_det_c = 2.0 * lc.diagonal().array().log().sum();
    return value + m * p * log_det_c + static_cast<double>(m) * m * c.sum();
  };

  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < starts; ++s) {
    Vector x0 = Vector::Zero(size);
    if (s > 0)
      for (int i = 0; i < size; ++i) x0(i) = 0.3 * rng.normal();
    best = std::min(best, minimize(f, {}, x0, 1e-8).value);
  }
  return best;
}

}  // namespace testing
