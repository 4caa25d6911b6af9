#include "matlrt/lrt.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>

#include "matlrt/estimator.hpp"
#include "matlrt/linalg.hpp"
#include "matlrt/parallel.hpp"

namespace matlrt {

namespace {

constexpr double kClampSlack = 1e-9;
constexpr std::array<char, 8> kMagic{'M', 'A', 'T', 'L', 'R', 'T', 'Q', 'C'};
constexpr std::uint64_t kReservedStreamBit = 1ULL << 63;

double clamp_statistic(double t) { return (t < 0.0 && t > -kClampSlack) ? 0.0 : t; }

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(std::istream& in) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) {
      throw DataError("truncated null distribution file");
    }
    value |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return value;
}

}  // namespace

void TestSpec::validate() const {
  if (m < 2) throw DataError("TestSpec: m must be at least 2");
  if (p < 1) throw DataError("TestSpec: p must be at least 1");
  if (S < 100) throw DataError("TestSpec: S must be at least 100");
}

std::string to_string(CacheStatus status) {
  switch (status) {
    case CacheStatus::kHit: return "hit";
    case CacheStatus::kMiss: return "miss";
    case CacheStatus::kNone: break;
  }
  return "none";
}

double statistic(const RelationalMatrix& y) {
  const FullFitResult full = fit_full(y);
  const NullFitResult null = fit_null(y);
  return clamp_statistic(null.scaled_loglik - full.scaled_loglik);
}

double statistic_replicates(std::span<const RelationalMatrix> ys, bool heteroscedastic) {
  const HeteroFitResult full = fit_full_replicates(ys, heteroscedastic);
  const HeteroFitResult null = fit_null_replicates(ys, heteroscedastic);
  return clamp_statistic(null.scaled_loglik - full.scaled_loglik);
}

double statistic_for_spec(std::span<const RelationalMatrix> ys, const TestSpec& spec) {
  if (ys.empty()) throw DataError("no data matrices");
  std::vector<RelationalMatrix> filled;
  if (spec.missing_diagonal) {
    filled.reserve(ys.size());
    for (const auto& y : ys) filled.push_back(y.with_missing_diagonal());
    ys = filled;
  }
  if (ys.size() == 1) return statistic(ys.front());
  return statistic_replicates(ys, spec.heteroscedastic);
}

std::vector<RelationalMatrix> sample_null_data(const TestSpec& spec,
                                               std::uint64_t stream_id) {
  RngStream rng(spec.seed, stream_id);
  std::vector<RelationalMatrix> ys;
  ys.reserve(spec.p);
  for (int k = 0; k < spec.p; ++k) {
    ys.emplace_back(standard_normal_matrix(spec.m, rng), !spec.missing_diagonal);
  }
  return ys;
}

std::vector<double> null_distribution(const TestSpec& spec, int workers) {
  spec.validate();
  std::vector<double> out(static_cast<std::size_t>(spec.S));
  parallel_for(out.size(), workers, [&](std::size_t s) {
    std::uint64_t stream = s;
    for (std::uint64_t attempt = 0;; ++attempt) {
      try {
        out[s] = statistic_for_spec(sample_null_data(spec, stream), spec);
        return;
      } catch (const NumericalError& e) {
        if (attempt >= 16) throw;
        std::clog << "matlrt: null draw " << s << " failed (" << e.what()
                  << "); resampling from reserved stream\n";
        stream = kReservedStreamBit | (static_cast<std::uint64_t>(s) << 5) | attempt;
      }
    }
  });
  std::sort(out.begin(), out.end());
  return out;
}

double quantile(std::span<const double> sorted_sample, double q) {
  if (sorted_sample.empty()) throw DataError("quantile of an empty sample");
  if (!(q > 0.0 && q < 1.0)) throw DataError("quantile level must lie in (0, 1)");
  const auto n = static_cast<double>(sorted_sample.size());
  // Smallest count k with k / S >= q; the slack absorbs rounding in q * S.
  auto k = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  k = std::clamp<std::size_t>(k, 1, sorted_sample.size());
  return sorted_sample[k - 1];
}

double p_value(std::span<const double> sorted_sample, double t) {
  const auto first = std::lower_bound(sorted_sample.begin(), sorted_sample.end(), t);
  const auto exceed = static_cast<double>(std::distance(first, sorted_sample.end()));
  return (1.0 + exceed) / (static_cast<double>(sorted_sample.size()) + 1.0);
}

NullSummary summarize(std::span<const double> sample) {
  NullSummary s;
  s.count = static_cast<std::int64_t>(sample.size());
  if (sample.empty()) return s;
  s.mean = std::accumulate(sample.begin(), sample.end(), 0.0) / sample.size();
  double ss = 0.0;
  for (double v : sample) ss += (v - s.mean) * (v - s.mean);
  s.sd = sample.size() > 1 ? std::sqrt(ss / (sample.size() - 1)) : 0.0;
  return s;
}

void write_null_file(const std::filesystem::path& path, const TestSpec& spec,
                     std::span<const double> sorted_sample) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, QuantileCache::kFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.m));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.p));
  put_le<std::uint32_t>(out, (spec.missing_diagonal ? 1u : 0u) |
                                 (spec.heteroscedastic ? 2u : 0u));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(sorted_sample.size()));
  put_le<std::uint64_t>(out, spec.seed);
  for (double v : sorted_sample) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<double> read_null_file(const std::filesystem::path& path, TestSpec* spec_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError(path.string() + " is not a null distribution file");
  const auto version = get_le<std::uint32_t>(in);
  if (version != QuantileCache::kFormatVersion) {
    throw DataError("unsupported null distribution file version " + std::to_string(version));
  }
  TestSpec spec;
  spec.m = static_cast<int>(get_le<std::uint32_t>(in));
  spec.p = static_cast<int>(get_le<std::uint32_t>(in));
  const auto flags = get_le<std::uint32_t>(in);
  spec.missing_diagonal = (flags & 1u) != 0;
  spec.heteroscedastic = (flags & 2u) != 0;
  spec.S = static_cast<std::int64_t>(get_le<std::uint64_t>(in));
  spec.seed = get_le<std::uint64_t>(in);
  std::vector<double> sample(static_cast<std::size_t>(spec.S));
  for (double& v : sample) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError(path.string() + " has trailing bytes");
  }
  if (spec_out) *spec_out = spec;
  return sample;
}

QuantileCache::QuantileCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {}

std::filesystem::path QuantileCache::resolve_directory(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("MATLRT_CACHE_DIR"); env && *env) return env;
  return fallback;
}

std::filesystem::path QuantileCache::path_for(const TestSpec& spec) const {
  return directory_ / ("null_m" + std::to_string(spec.m) + "_p" + std::to_string(spec.p) +
                       "_md" + std::to_string(spec.missing_diagonal ? 1 : 0) + "_het" +
                       std::to_string(spec.heteroscedastic ? 1 : 0) + "_S" +
                       std::to_string(spec.S) + "_seed" + std::to_string(spec.seed) +
                       ".bin");
}

std::optional<std::vector<double>> QuantileCache::load(const TestSpec& spec) const {
  const auto path = path_for(spec);
  if (!std::filesystem::exists(path)) return std::nullopt;
  TestSpec stored;
  auto sample = read_null_file(path, &stored);
  if (!(stored == spec)) {
    throw DataError("cache file " + path.string() + " does not match its spec");
  }
  return sample;
}

void QuantileCache::store(const TestSpec& spec, std::span<const double> sorted_sample) const {
  std::lock_guard lock(write_mutex_);
  std::filesystem::create_directories(directory_);
  const auto path = path_for(spec);
  auto tmp = path;
  tmp += ".tmp";
  write_null_file(tmp, spec, sorted_sample);
  std::filesystem::rename(tmp, path);
}

std::vector<double> QuantileCache::get_or_create(const TestSpec& spec, int workers,
                                                 CacheStatus* status) const {
  if (auto cached = load(spec)) {
    if (status) *status = CacheStatus::kHit;
    return std::move(*cached);
  }
  auto sample = null_distribution(spec, workers);
  store(spec, sample);
  if (status) *status = CacheStatus::kMiss;
  return sample;
}

TestResult run_test(std::span<const RelationalMatrix> data, TestSpec spec,
                    const QuantileCache* cache, int workers) {
  if (data.empty()) throw DataError("no data matrices");
  spec.m = data.front().m();
  spec.p = static_cast<int>(data.size());
  for (const auto& y : data) {
    if (y.m() != spec.m) throw DataError("replicates have different dimensions");
    if (!y.diagonal_defined()) spec.missing_diagonal = true;
  }
  spec.validate();

  TestResult result;
  result.spec = spec;
  result.statistic = statistic_for_spec(data, spec);
  std::vector<double> sample;
  if (cache) {
    sample = cache->get_or_create(spec, workers, &result.cache);
  } else {
    sample = null_distribution(spec, workers);
  }
  result.p_value = p_value(sample, result.statistic);
  result.quantile_95 = quantile(sample, 0.95);
  result.null_sample_summary = summarize(sample);
  return result;
}

TestResult run_test(const RelationalMatrix& y, TestSpec spec, const QuantileCache* cache,
                    int workers) {
  return run_test(std::span(&y, 1), spec, cache, workers);
}

}  // namespace matlrt
