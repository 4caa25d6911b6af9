#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "matlrt/core.hpp"

namespace matlrt {

/// Everything that determines a simulated null distribution.
struct TestSpec {
  int m = 0;
  int p = 1;  // replicate count
  bool missing_diagonal = false;
  bool heteroscedastic = false;
  std::int64_t S = 10000;
  std::uint64_t seed = 1;

  /// Throws DataError unless m >= 2, p >= 1 and S >= 100.
  void validate() const;
  bool operator==(const TestSpec&) const = default;
};

inline constexpr std::int64_t kInteractiveSamples = 10000;
inline constexpr std::int64_t kTableSamples = 100000;

struct NullSummary {
  std::int64_t count = 0;
  double mean = 0.0;
  double sd = 0.0;
};

enum class CacheStatus { kNone, kHit, kMiss };

std::string to_string(CacheStatus status);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double quantile_95 = 0.0;
  NullSummary null_sample_summary;
  TestSpec spec;
  CacheStatus cache = CacheStatus::kNone;
  // Set when the reference distribution is only asymptotically valid
  // (statistics computed on regression residuals).
  bool approximate_null = false;
};

/// LRT statistic for one matrix: null minus unrestricted scaled log
/// likelihood, m (log|D_c| + log|D_r| - log|Y Y^t / m|). Values in
/// (-1e-9, 0) are clamped to 0.
double statistic(const RelationalMatrix& y);

/// LRT statistic for p replicates, with optional per-replicate scales.
double statistic_replicates(std::span<const RelationalMatrix> ys, bool heteroscedastic);

/// Statistic for `ys` under the model described by `spec` (p == 1 uses the
/// single-matrix statistic). The diagonal is zero-filled when
/// spec.missing_diagonal is set.
double statistic_for_spec(std::span<const RelationalMatrix> ys, const TestSpec& spec);

/// One null draw for stream `stream_id`: p i.i.d. N(0, I, I) matrices,
/// zero-filled diagonal when requested.
std::vector<RelationalMatrix> sample_null_data(const TestSpec& spec,
                                               std::uint64_t stream_id);

/// S statistics under N(0, I, I), sorted ascending. Draw s uses stream s; a
/// rank-deficient draw is replaced using a reserved stream.
std::vector<double> null_distribution(const TestSpec& spec, int workers = 0);

/// Smallest sample value t with #{T_s <= t} / S >= q.
double quantile(std::span<const double> sorted_sample, double q);

/// (1 + #{T_s >= t}) / (S + 1).
double p_value(std::span<const double> sorted_sample, double t);

NullSummary summarize(std::span<const double> sample);

/// Persistent null-distribution cache. One file per TestSpec; layout:
///   bytes 0-7   magic "MATLRTQC"
///   uint32      format version (1)
///   uint32      m
///   uint32      p
///   uint32      flags (bit 0 missing diagonal, bit 1 heteroscedastic)
///   uint64      S
///   uint64      seed
///   S x float64 sorted statistics
/// All integers and floats are little-endian.
class QuantileCache {
public:
  static constexpr std::uint32_t kFormatVersion = 1;

  explicit QuantileCache(std::filesystem::path directory);

  /// Directory from MATLRT_CACHE_DIR if set, otherwise `fallback`.
  static std::filesystem::path resolve_directory(const std::filesystem::path& fallback);

  std::filesystem::path path_for(const TestSpec& spec) const;
  std::optional<std::vector<double>> load(const TestSpec& spec) const;
  void store(const TestSpec& spec, std::span<const double> sorted_sample) const;

  /// Loads the distribution or simulates and stores it.
  std::vector<double> get_or_create(const TestSpec& spec, int workers,
                                    CacheStatus* status = nullptr) const;

  const std::filesystem::path& directory() const { return directory_; }

private:
  std::filesystem::path directory_;
  mutable std::mutex write_mutex_;
};

void write_null_file(const std::filesystem::path& path, const TestSpec& spec,
                     std::span<const double> sorted_sample);
/// Returns the stored sample; `spec_out` receives the header fields.
std::vector<double> read_null_file(const std::filesystem::path& path,
                                   TestSpec* spec_out = nullptr);

/// Full test: statistic of `data` plus its Monte Carlo reference for `spec`.
/// spec.m and spec.p are taken from the data. Uses `cache` when given.
TestResult run_test(std::span<const RelationalMatrix> data, TestSpec spec,
                    const QuantileCache* cache = nullptr, int workers = 0);

TestResult run_test(const RelationalMatrix& y, TestSpec spec,
                    const QuantileCache* cache = nullptr, int workers = 0);

}  // namespace matlrt
