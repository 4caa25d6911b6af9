// matlrt: likelihood ratio test for row and column dependence in relational
// data matrices.
//
// Exit codes: 0 success, 2 data or usage error, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "matlrt/eigenmodel.hpp"
#include "matlrt/io.hpp"
#include "matlrt/lrt.hpp"
#include "matlrt/meanmodel.hpp"
#include "matlrt/power.hpp"

namespace {

using namespace matlrt;

struct Common {
  std::int64_t S = kInteractiveSamples;
  std::uint64_t seed = 1;
  std::string cache_dir = ".matlrt-cache";
  bool no_cache = false;
  int workers = 0;
  std::string output;
  int verbosity = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--S", c.S, "Monte Carlo null sample size");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--cache-dir", c.cache_dir,
                  "Null distribution cache directory (MATLRT_CACHE_DIR overrides)");
  app->add_flag("--no-cache", c.no_cache, "Do not read or write the null cache");
  app->add_option("--workers", c.workers, "Worker threads (0 = logical cores)");
  app->add_option("--output", c.output, "Output file (default stdout)");
  app->add_flag("-v,--verbose", c.verbosity, "Log progress to stderr");
}

std::unique_ptr<QuantileCache> make_cache(const Common& c) {
  if (c.no_cache) return nullptr;
  return std::make_unique<QuantileCache>(QuantileCache::resolve_directory(c.cache_dir));
}

// Writes through `fn` to the output file, or stdout when none was given.
template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  fn(out);
  if (!out) throw DataError("failed writing " + path);
}

// Fails early when the output file could not be created later.
void check_output_path(const std::string& path) {
  if (path.empty() || path == "-") return;
  const auto parent = std::filesystem::absolute(path).parent_path();
  if (!std::filesystem::is_directory(parent)) {
    throw DataError("output directory does not exist: " + parent.string());
  }
}

void log(const Common& c, const std::string& message) {
  if (c.verbosity > 0) std::cerr << "matlrt: " << message << "\n";
}

struct TestArgs {
  std::string input;
  std::string replicates;
  std::string covariates;
  std::string names;
  bool missing_diagonal = false;
  bool heteroscedastic = false;
  double level = 0.05;
};

int cmd_test(const Common& c, const TestArgs& a) {
  if (a.input.empty() == a.replicates.empty()) {
    throw DataError("give exactly one of --input or --replicates");
  }
  std::vector<RelationalMatrix> ys;
  std::optional<DyadicDesign> design;
  if (!a.input.empty()) {
    ys.push_back(io::read_dense_csv(a.input, a.missing_diagonal));
    if (!a.covariates.empty()) {
      const std::vector<std::string> nodes = [&] {
        std::vector<std::string> n;
        for (int i = 0; i < ys.front().m(); ++i) n.push_back(std::to_string(i));
        return n;
      }();
      const std::vector<std::string> reps{"0"};
      design = io::read_covariates_csv(a.covariates, nodes, reps);
    }
  } else {
    auto data = io::read_long_csv(a.replicates,
                                  a.names.empty() ? std::nullopt
                                                  : std::optional<std::filesystem::path>(a.names),
                                  a.missing_diagonal);
    ys = std::move(data.ys);
    design = std::move(data.design);
    if (!a.covariates.empty()) design = io::read_covariates_csv(a.covariates, data.nodes, data.replicates);
  }

  TestSpec spec;
  spec.missing_diagonal = a.missing_diagonal;
  spec.heteroscedastic = a.heteroscedastic;
  spec.S = c.S;
  spec.seed = c.seed;

  std::optional<ResidualStack> demeaned;
  if (design) {
    demeaned = ols_demean(ys, *design);
    ys = demeaned->residuals;
    log(c, "demeaned with " + std::to_string(design->p_x()) + " covariates");
  }

  const auto cache = make_cache(c);
  TestResult result = run_test(ys, spec, cache.get(), c.workers);
  result.approximate_null = demeaned.has_value();
  log(c, "null cache " + to_string(result.cache));

  std::optional<std::string> cache_file;
  if (cache) cache_file = cache->path_for(result.spec).filename().string();
  nlohmann::json report = io::report_json(result, a.level, cache_file);
  report["command"] = "test";
  if (demeaned) {
    report["regression"] = {{"names", design->names()},
                            {"beta", std::vector<double>(demeaned->beta_hat.begin(), demeaned->beta_hat.end())},
                            {"se", std::vector<double>(demeaned->beta_se.begin(), demeaned->beta_se.end())}};
  }
  emit(c.output, [&](std::ostream& out) { out << report.dump(2) << "\n"; });
  return 0;
}

struct NullArgs {
  int m = 0;
  int p = 1;
  bool missing_diagonal = false;
  bool heteroscedastic = false;
};

int cmd_null(const Common& c, const NullArgs& a) {
  TestSpec spec{a.m, a.p, a.missing_diagonal, a.heteroscedastic, c.S, c.seed};
  spec.validate();
  std::vector<double> sample;
  std::string path;
  if (!c.output.empty()) {
    sample = null_distribution(spec, c.workers);
    write_null_file(c.output, spec, sample);
    path = c.output;
  } else {
    const auto cache = std::make_unique<QuantileCache>(QuantileCache::resolve_directory(c.cache_dir));
    CacheStatus status{};
    sample = cache->get_or_create(spec, c.workers, &status);
    path = cache->path_for(spec).string();
    log(c, "null cache " + to_string(status));
  }
  const NullSummary summary = summarize(sample);
  nlohmann::json info = {{"command", "null"},
                         {"version", io::version()},
                         {"spec", io::spec_json(spec)},
                         {"file", path},
                         {"quantile_90", quantile(sample, 0.90)},
                         {"quantile_95", quantile(sample, 0.95)},
                         {"quantile_99", quantile(sample, 0.99)},
                         {"mean", summary.mean},
                         {"sd", summary.sd}};
  std::cout << info.dump(2) << "\n";
  return 0;
}

struct PowerArgs {
  std::string config;
  bool full_grid = false;
  std::optional<int> n_reps;
};

int cmd_power(const Common& c, const PowerArgs& a, const CLI::App& app) {
  std::ifstream in(a.config);
  if (!in) throw DataError("cannot open " + a.config);
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid power config: ") + e.what());
  }
  io::PowerRun run = io::parse_power_config(config, a.full_grid);
  if (app.count("--S")) run.options.S = c.S;
  if (app.count("--seed")) run.options.seed = c.seed;
  if (app.count("--workers")) run.options.workers = c.workers;
  if (a.n_reps) run.options.n_reps = *a.n_reps;

  const auto cache = make_cache(c);
  log(c, "simulating " + std::to_string(run.alternatives.size()) + " alternatives");
  const auto points = power_curve(run.alternatives, run.options, cache.get());
  io::RunHeader header{"power", run.options.seed, run.options.S,
                       {{"n_reps", run.options.n_reps}, {"level", run.options.level}}};
  emit(c.output, [&](std::ostream& out) { io::write_power_csv(out, points, header); });
  return 0;
}

struct EigenArgs {
  std::string input;
  std::string edge_list;
  int m = 0;
  int rank = 0;
  bool fix_gamma = false;
  bool missing_diagonal = false;
  int n_iter = 10000;
  int burn_in = 5000;
  int thin = 25;
};

int cmd_eigen(const Common& c, const EigenArgs& a) {
  if (a.input.empty() == a.edge_list.empty()) {
    throw DataError("give exactly one of --input or --edge-list");
  }
  const bool diagonal_meaningful = !a.missing_diagonal;
  const BinaryNetwork net = a.input.empty()
                                ? io::read_edge_list(a.edge_list, a.m, diagonal_meaningful)
                                : io::read_adjacency_csv(a.input, diagonal_meaningful);
  GibbsOptions options;
  options.rank = a.rank;
  options.n_iter = a.n_iter;
  options.burn_in = a.burn_in;
  options.thin = a.thin;
  options.fix_gamma = a.fix_gamma;

  RngStream rng(c.seed, 0);
  log(c, "running Gibbs sampler, m = " + std::to_string(net.m()) + ", R = " + std::to_string(a.rank));
  const auto states = gibbs_fit(net, options, rng);

  TestSpec spec;
  spec.missing_diagonal = a.missing_diagonal;
  spec.S = c.S;
  spec.seed = c.seed;
  const auto cache = make_cache(c);
  const FuzzyPValueSample fuzzy = fuzzy_p_values(states, spec, cache.get(), c.workers);

  spec.m = net.m();
  io::RunHeader header{"eigen", c.seed, c.S,
                       {{"m", net.m()},
                        {"rank", a.rank},
                        {"fix_gamma", a.fix_gamma},
                        {"missing_diagonal", a.missing_diagonal},
                        {"n_iter", a.n_iter},
                        {"burn_in", a.burn_in},
                        {"thin", a.thin}}};
  emit(c.output, [&](std::ostream& out) { io::write_fuzzy_csv(out, fuzzy, header); });
  return 0;
}

struct DemeanArgs {
  std::string replicates;
  std::string covariates;
  std::string names;
  bool missing_diagonal = false;
};

int cmd_demean(const Common& c, const DemeanArgs& a) {
  auto data = io::read_long_csv(a.replicates,
                                a.names.empty() ? std::nullopt
                                                : std::optional<std::filesystem::path>(a.names),
                                a.missing_diagonal);
  if (!a.covariates.empty()) data.design = io::read_covariates_csv(a.covariates, data.nodes, data.replicates);
  if (!data.design) throw DataError("no covariates: add x columns or pass --covariates");
  const ResidualStack r = ols_demean(data.ys, *data.design);
  emit(c.output, [&](std::ostream& out) {
    out << "# matlrt " << io::version() << " demean rows=" << r.n_rows << "\n";
    for (int k = 0; k < data.design->p_x(); ++k) {
      out << "# beta " << data.design->names()[k] << " = " << io::format_number(r.beta_hat(k))
          << " (se " << io::format_number(r.beta_se(k)) << ")\n";
    }
    io::write_long_csv(out, r.residuals, data.nodes, data.replicates);
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihood ratio test for row and column dependence in relational data"};
  app.set_version_flag("--version", matlrt::io::version());
  app.require_subcommand(1);

  Common common;

  TestArgs test_args;
  auto* test = app.add_subcommand("test", "Test a matrix (or replicate stack) for dependence");
  add_common(test, common);
  test->add_option("--input", test_args.input, "Dense CSV matrix")->check(CLI::ExistingFile);
  test->add_option("--replicates", test_args.replicates, "Long-format CSV (i,j,k,y[,x...])")->check(CLI::ExistingFile);
  test->add_option("--covariates", test_args.covariates, "Long-format covariates (i,j,k,x...)")->check(CLI::ExistingFile);
  test->add_option("--names", test_args.names, "JSON naming map for long-format labels")->check(CLI::ExistingFile);
  test->add_flag("--missing-diagonal", test_args.missing_diagonal, "Diagonal is undefined");
  test->add_flag("--heteroscedastic", test_args.heteroscedastic, "Per-replicate scales");
  test->add_option("--level", test_args.level, "Test level")->check(CLI::Range(0.0, 1.0));

  NullArgs null_args;
  auto* null = app.add_subcommand("null", "Simulate and store a null distribution");
  add_common(null, common);
  null->add_option("--m", null_args.m, "Matrix dimension")->required();
  null->add_option("--p", null_args.p, "Replicate count");
  null->add_flag("--missing-diagonal", null_args.missing_diagonal, "Zero-filled diagonal");
  null->add_flag("--heteroscedastic", null_args.heteroscedastic, "Per-replicate scales");

  PowerArgs power_args;
  auto* power = app.add_subcommand("power", "Monte Carlo power study");
  add_common(power, common);
  power->add_option("--config", power_args.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  power->add_flag("--full-grid", power_args.full_grid, "25 x 25 exchangeable grid");
  power->add_option("--n-reps", power_args.n_reps, "Replications per point");

  EigenArgs eigen_args;
  auto* eigen = app.add_subcommand("eigen", "Probit eigenmodel fit and fuzzy p-values");
  add_common(eigen, common);
  eigen->add_option("--input", eigen_args.input, "Dense 0/1 adjacency CSV")->check(CLI::ExistingFile);
  eigen->add_option("--edge-list", eigen_args.edge_list, "Edge list CSV (0-based)")->check(CLI::ExistingFile);
  eigen->add_option("--m", eigen_args.m, "Node count for edge lists");
  eigen->add_option("--rank", eigen_args.rank, "Latent factor rank R");
  eigen->add_flag("--fix-gamma", eigen_args.fix_gamma, "Fix the threshold at the density quantile");
  eigen->add_flag("--missing-diagonal", eigen_args.missing_diagonal, "Self ties are undefined");
  eigen->add_option("--n-iter", eigen_args.n_iter, "Gibbs iterations");
  eigen->add_option("--burn-in", eigen_args.burn_in, "Burn-in iterations");
  eigen->add_option("--thin", eigen_args.thin, "Thinning interval");

  DemeanArgs demean_args;
  auto* demean = app.add_subcommand("demean", "OLS demeaning of a replicate stack");
  add_common(demean, common);
  demean->add_option("--replicates", demean_args.replicates, "Long-format CSV")->required()->check(CLI::ExistingFile);
  demean->add_option("--covariates", demean_args.covariates, "Long-format covariates")->check(CLI::ExistingFile);
  demean->add_option("--names", demean_args.names, "JSON naming map")->check(CLI::ExistingFile);
  demean->add_flag("--missing-diagonal", demean_args.missing_diagonal, "Diagonal is undefined");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    check_output_path(common.output);
    if (*test) return cmd_test(common, test_args);
    if (*null) return cmd_null(common, null_args);
    if (*power) return cmd_power(common, power_args, *power);
    if (*eigen) return cmd_eigen(common, eigen_args);
    if (*demean) return cmd_demean(common, demean_args);
  } catch (const matlrt::NumericalError& e) {
    std::cerr << "matlrt: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const matlrt::DataError& e) {
    std::cerr << "matlrt: data error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "matlrt: data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "matlrt: error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
