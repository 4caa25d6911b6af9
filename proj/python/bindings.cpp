#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <optional>

#include "matlrt/eigenmodel.hpp"
#include "matlrt/estimator.hpp"
#include "matlrt/io.hpp"
#include "matlrt/lrt.hpp"
#include "matlrt/meanmodel.hpp"
#include "matlrt/power.hpp"

namespace py = pybind11;
using namespace matlrt;

namespace {

std::vector<RelationalMatrix> wrap(const std::vector<Matrix>& ys, bool missing_diagonal) {
  std::vector<RelationalMatrix> out;
  out.reserve(ys.size());
  for (const auto& y : ys) out.emplace_back(y, !missing_diagonal);
  return out;
}

std::unique_ptr<QuantileCache> make_cache(const std::optional<std::string>& dir) {
  if (!dir) return nullptr;
  return std::make_unique<QuantileCache>(QuantileCache::resolve_directory(*dir));
}

py::dict spec_dict(const TestSpec& s) {
  py::dict d;
  d["m"] = s.m;
  d["p"] = s.p;
  d["missing_diagonal"] = s.missing_diagonal;
  d["heteroscedastic"] = s.heteroscedastic;
  d["S"] = s.S;
  d["seed"] = s.seed;
  return d;
}

py::dict result_dict(const TestResult& r) {
  py::dict d;
  d["statistic"] = r.statistic;
  d["p_value"] = r.p_value;
  d["quantile_95"] = r.quantile_95;
  d["null_mean"] = r.null_sample_summary.mean;
  d["null_sd"] = r.null_sample_summary.sd;
  d["spec"] = spec_dict(r.spec);
  d["approximate_null"] = r.approximate_null;
  return d;
}

}  // namespace

PYBIND11_MODULE(_matlrt, mod) {
  mod.doc() = "Likelihood ratio test of row and column dependence in square relational matrices";

  // Library failures surface as ValueError (bad input) and ArithmeticError.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DataError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(PyExc_ArithmeticError, e.what());
    }
  });

  mod.def("version", &io::version);

  mod.def(
      "statistic",
      [](const std::vector<Matrix>& ys, bool missing_diagonal, bool heteroscedastic) {
        const auto data = wrap(ys, missing_diagonal);
        if (data.size() == 1) return statistic(data.front());
        return statistic_replicates(data, heteroscedastic);
      },
      py::arg("ys"), py::arg("missing_diagonal") = false, py::arg("heteroscedastic") = false);

  mod.def(
      "fit_null",
      [](const Matrix& y, bool missing_diagonal) {
        const auto fit = fit_null(RelationalMatrix(y, !missing_diagonal));
        py::dict d;
        d["d_r"] = fit.d.d_r();
        d["d_c"] = fit.d.d_c();
        d["scaled_loglik"] = fit.scaled_loglik;
        d["iterations"] = fit.iterations;
        d["converged"] = fit.converged;
        d["history"] = fit.history;
        return d;
      },
      py::arg("y"), py::arg("missing_diagonal") = false);

  mod.def(
      "fit_full",
      [](const Matrix& y) {
        const auto fit = fit_full(RelationalMatrix(y));
        py::dict d;
        d["sigma_r"] = fit.cov.sigma_r();
        d["sigma_c"] = fit.cov.sigma_c();
        d["scaled_loglik"] = fit.scaled_loglik;
        return d;
      },
      py::arg("y"));

  mod.def(
      "null_distribution",
      [](int m, int p, bool missing_diagonal, bool heteroscedastic, std::int64_t S, std::uint64_t seed,
         int workers, std::optional<std::string> cache_dir) {
        const TestSpec spec{m, p, missing_diagonal, heteroscedastic, S, seed};
        std::vector<double> sample;
        {
          py::gil_scoped_release release;
          const auto cache = make_cache(cache_dir);
          sample = cache ? cache->get_or_create(spec, workers) : null_distribution(spec, workers);
        }
        return Vector(Eigen::Map<const Vector>(sample.data(), static_cast<Eigen::Index>(sample.size())));
      },
      py::arg("m"), py::arg("p") = 1, py::arg("missing_diagonal") = false, py::arg("heteroscedastic") = false,
      py::arg("S") = kInteractiveSamples, py::arg("seed") = 1, py::arg("workers") = 0,
      py::arg("cache_dir") = py::none());

  mod.def(
      "quantile", [](std::vector<double> s, double q) { return quantile(s, q); }, py::arg("sorted_sample"),
      py::arg("q"));
  mod.def(
      "p_value", [](std::vector<double> s, double t) { return p_value(s, t); }, py::arg("sorted_sample"),
      py::arg("t"));

  mod.def(
      "run_test",
      [](const std::vector<Matrix>& ys, bool missing_diagonal, bool heteroscedastic, std::int64_t S,
         std::uint64_t seed, int workers, std::optional<std::string> cache_dir) {
        const auto data = wrap(ys, missing_diagonal);
        const TestSpec spec{0, 0, missing_diagonal, heteroscedastic, S, seed};
        TestResult r;
        {
          py::gil_scoped_release release;
          const auto cache = make_cache(cache_dir);
          r = run_test(data, spec, cache.get(), workers);
        }
        return result_dict(r);
      },
      py::arg("ys"), py::arg("missing_diagonal") = false, py::arg("heteroscedastic") = false,
      py::arg("S") = kInteractiveSamples, py::arg("seed") = 1, py::arg("workers") = 0,
      py::arg("cache_dir") = py::none());

  mod.def(
      "ols_demean",
      [](const std::vector<Matrix>& ys, const Matrix& x, std::vector<std::string> names, bool missing_diagonal) {
        const auto data = wrap(ys, missing_diagonal);
        const int m = data.empty() ? 0 : data.front().m();
        const DyadicDesign design(m, static_cast<int>(data.size()), x, std::move(names));
        const auto r = ols_demean(data, design);
        std::vector<Matrix> residuals;
        for (const auto& e : r.residuals) residuals.push_back(e.entries());
        py::dict d;
        d["residuals"] = residuals;
        d["beta"] = r.beta_hat;
        d["se"] = r.beta_se;
        d["n_rows"] = r.n_rows;
        return d;
      },
      py::arg("ys"), py::arg("x"), py::arg("names") = std::vector<std::string>{},
      py::arg("missing_diagonal") = false);

  mod.def(
      "power_from_config",
      [](const std::string& config, bool full_grid) {
        const auto run = io::parse_power_config(nlohmann::json::parse(config), full_grid);
        std::vector<PowerPoint> points;
        {
          py::gil_scoped_release release;
          points = power_curve(run.alternatives, run.options);
        }
        py::list out;
        for (const auto& p : points) {
          py::dict d;
          d["kind"] = to_string(p.alt.kind);
          d["m"] = p.alt.m;
          d["rho_r"] = p.alt.rho_r;
          d["rho_c"] = p.alt.rho_c;
          d["rho"] = p.alt.rho;
          d["mu"] = p.alt.mu;
          d["level"] = p.level;
          d["n_reps"] = p.n_reps;
          d["rejections"] = p.rejections;
          d["power"] = p.power;
          d["mc_se"] = p.mc_se;
          d["critical_value"] = p.critical_value;
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("full_grid") = false);

  mod.def(
      "fuzzy_p_values",
      [](const Matrix& a, int rank, bool missing_diagonal, int n_iter, int burn_in, int thin, bool fix_gamma,
         std::int64_t S, std::uint64_t seed, int workers, std::optional<std::string> cache_dir) {
        const BinaryNetwork net(a, !missing_diagonal);
        GibbsOptions options;
        options.rank = rank;
        options.n_iter = n_iter;
        options.burn_in = burn_in;
        options.thin = thin;
        options.fix_gamma = fix_gamma;
        FuzzyPValueSample fuzzy;
        {
          py::gil_scoped_release release;
          RngStream rng(seed, 0);
          const auto states = gibbs_fit(net, options, rng);
          const auto cache = make_cache(cache_dir);
          fuzzy = fuzzy_p_values(states, TestSpec{0, 1, missing_diagonal, false, S, seed},
                                 cache.get(), workers);
        }
        std::vector<int> iteration;
        std::vector<double> stat, p;
        for (const auto& d : fuzzy.draws) {
          iteration.push_back(d.iteration);
          stat.push_back(d.statistic);
          p.push_back(d.p_value);
        }
        py::dict d;
        d["iteration"] = iteration;
        d["statistic"] = stat;
        d["p_value"] = p;
        return d;
      },
      py::arg("a"), py::arg("rank") = 0, py::arg("missing_diagonal") = false, py::arg("n_iter") = 10000,
      py::arg("burn_in") = 5000, py::arg("thin") = 25, py::arg("fix_gamma") = false,
      py::arg("S") = kInteractiveSamples, py::arg("seed") = 1, py::arg("workers") = 0,
      py::arg("cache_dir") = py::none());
}
