#include "matlrt/power.hpp"

#include <cmath>
#include <map>

#include "matlrt/parallel.hpp"

namespace matlrt {

namespace {

constexpr std::uint64_t kPowerSeedSalt = 0x706f776572ULL;  // "power"

}  // namespace

std::string to_string(AlternativeKind kind) {
  switch (kind) {
    case AlternativeKind::kExchangeable: return "exchangeable";
    case AlternativeKind::kSparsePair: return "sparse_pair";
    case AlternativeKind::kBlockmodel: return "blockmodel";
  }
  return "unknown";
}

AlternativeKind parse_alternative_kind(const std::string& name) {
  if (name == "exchangeable") return AlternativeKind::kExchangeable;
  if (name == "sparse_pair") return AlternativeKind::kSparsePair;
  if (name == "blockmodel") return AlternativeKind::kBlockmodel;
  throw DataError("unknown alternative kind '" + name + "'");
}

AlternativeSpec AlternativeSpec::exchangeable(int m, double rho_r, double rho_c) {
  AlternativeSpec a;
  a.kind = AlternativeKind::kExchangeable;
  a.m = m;
  a.rho_r = rho_r;
  a.rho_c = rho_c;
  a.validate();
  return a;
}

AlternativeSpec AlternativeSpec::sparse_pair(int m, double rho) {
  AlternativeSpec a;
  a.kind = AlternativeKind::kSparsePair;
  a.m = m;
  a.rho = rho;
  a.validate();
  return a;
}

AlternativeSpec AlternativeSpec::blockmodel(int m, double mu) {
  AlternativeSpec a;
  a.kind = AlternativeKind::kBlockmodel;
  a.m = m;
  a.mu = mu;
  a.validate();
  return a;
}

void AlternativeSpec::validate() const {
  if (m < 2) throw DataError("alternative needs m >= 2");
  switch (kind) {
    case AlternativeKind::kExchangeable: {
      // rho = 1 gives a rank-one factor and rank-deficient data.
      const double lower = -1.0 / (m - 1);
      for (double r : {rho_r, rho_c}) {
        if (!(r > lower && r < 1.0)) {
          throw DataError("exchangeable correlation must lie in (-1/(m-1), 1)");
        }
      }
      break;
    }
    case AlternativeKind::kSparsePair:
      if (!(std::abs(rho) < 1.0)) throw DataError("sparse pair correlation must satisfy |rho| < 1");
      break;
    case AlternativeKind::kBlockmodel:
      if (!(mu >= 0.0)) throw DataError("blockmodel mean must be nonnegative");
      break;
  }
}

RelationalMatrix sample_alternative(const AlternativeSpec& alt, RngStream& rng) {
  alt.validate();
  const int m = alt.m;
  switch (alt.kind) {
    case AlternativeKind::kExchangeable:
      return sample_matrix_normal(
          m, SeparableCovariance(exchangeable_correlation(m, alt.rho_r),
                                 exchangeable_correlation(m, alt.rho_c)),
          rng);
    case AlternativeKind::kSparsePair: {
      Matrix sigma_r = Matrix::Identity(m, m);
      sigma_r(0, 1) = sigma_r(1, 0) = alt.rho;
      return sample_matrix_normal(m, SeparableCovariance(sigma_r, Matrix::Identity(m, m)), rng);
    }
    case AlternativeKind::kBlockmodel: {
      // u_i = (b_i, 1 - b_i), v_j = (c_j, 1 - c_j) with Bernoulli(1/2) b, c:
      // u_i^t W v_j = mu ((1 - b_i) c_j - b_i (1 - c_j)).
      Vector b(m), c(m);
      for (int i = 0; i < m; ++i) b(i) = rng.uniform() < 0.5 ? 1.0 : 0.0;
      for (int j = 0; j < m; ++j) c(j) = rng.uniform() < 0.5 ? 1.0 : 0.0;
      Matrix y = standard_normal_matrix(m, rng);
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) y(i, j) += alt.mu * ((1.0 - b(i)) * c(j) - b(i) * (1.0 - c(j)));
      return RelationalMatrix(std::move(y));
    }
  }
  throw DataError("unknown alternative kind");
}

std::vector<PowerPoint> power_curve(std::span<const AlternativeSpec> alts,
                                    const PowerOptions& options,
                                    const QuantileCache* cache) {
  if (options.n_reps < 1) throw DataError("n_reps must be positive");
  if (!(options.level > 0.0 && options.level < 1.0)) throw DataError("level must lie in (0, 1)");

  std::map<int, double> critical;
  for (const auto& alt : alts) {
    alt.validate();
    if (critical.contains(alt.m)) continue;
    TestSpec spec;
    spec.m = alt.m;
    spec.S = options.S;
    spec.seed = options.seed;
    const auto sample = cache ? cache->get_or_create(spec, options.workers)
                              : null_distribution(spec, options.workers);
    critical[alt.m] = quantile(sample, 1.0 - options.level);
  }

  const std::uint64_t seed = mix64(options.seed ^ kPowerSeedSalt);
  const std::size_t reps = static_cast<std::size_t>(options.n_reps);
  std::vector<char> rejected(alts.size() * reps, 0);
  parallel_for(rejected.size(), options.workers, [&](std::size_t idx) {
    const std::size_t point = idx / reps;
    const std::size_t rep = idx % reps;
    RngStream rng(seed, (static_cast<std::uint64_t>(point) << 32) | rep);
    const AlternativeSpec& alt = alts[point];
    rejected[idx] = statistic(sample_alternative(alt, rng)) > critical.at(alt.m) ? 1 : 0;
  });

  std::vector<PowerPoint> out;
  out.reserve(alts.size());
  for (std::size_t i = 0; i < alts.size(); ++i) {
    PowerPoint pt;
    pt.alt = alts[i];
    pt.level = options.level;
    pt.critical_value = critical.at(alts[i].m);
    pt.n_reps = options.n_reps;
    for (std::size_t r = 0; r < reps; ++r) pt.rejections += rejected[i * reps + r];
    pt.power = static_cast<double>(pt.rejections) / pt.n_reps;
    pt.mc_se = std::sqrt(pt.power * (1.0 - pt.power) / pt.n_reps);
    out.push_back(pt);
  }
  return out;
}

std::vector<AlternativeSpec> exchangeable_grid(int m, int n) {
  if (n < 2) throw DataError("grid needs at least two points per axis");
  const double lower = -1.0 / (m - 1);
  // Keep a small margin from both singular endpoints.
  const double margin = 0.01;
  std::vector<double> axis(n);
  for (int k = 0; k < n; ++k) {
    axis[k] = (lower + margin) + (1.0 - margin - (lower + margin)) * k / (n - 1);
  }
  std::vector<AlternativeSpec> grid;
  grid.reserve(static_cast<std::size_t>(n) * n);
  for (double rr : axis)
    for (double rc : axis) grid.push_back(AlternativeSpec::exchangeable(m, rr, rc));
  return grid;
}

}  // namespace matlrt
