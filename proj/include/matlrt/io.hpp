#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "matlrt/core.hpp"
#include "matlrt/eigenmodel.hpp"
#include "matlrt/lrt.hpp"
#include "matlrt/meanmodel.hpp"
#include "matlrt/power.hpp"

// File formats. CSV fields are split on commas without quoting support;
// numbers are written with 17 significant digits.
namespace matlrt::io {

inline constexpr int kReportSchemaVersion = 1;

/// Library version, git-describe style when built from a checkout.
std::string version();

std::string format_number(double value);

/// Dense m x m CSV with an optional header row. "NA" (or an empty field) is
/// accepted only on the diagonal and only when `missing_diagonal` is set.
RelationalMatrix read_dense_csv(const std::filesystem::path& path, bool missing_diagonal);
void write_dense_csv(std::ostream& out, const Matrix& entries);

/// Long-format replicate stack: header "i,j,k,y[,x_1,...]" followed by one
/// row per entry. Node and replicate labels are arbitrary strings; their
/// order comes from the sidecar JSON ({"nodes": [...], "replicates": [...]})
/// when given, otherwise from sorting the distinct labels (numerically when
/// all labels are integers).
struct LongData {
  std::vector<RelationalMatrix> ys;
  std::vector<std::string> nodes;
  std::vector<std::string> replicates;
  std::optional<DyadicDesign> design;  // set when covariate columns exist
};

LongData read_long_csv(const std::filesystem::path& path,
                       const std::optional<std::filesystem::path>& sidecar,
                       bool missing_diagonal);

/// Covariates in long format, header "i,j,k,<name>,..." with labels from
/// `nodes` / `replicates`. Entries not listed (e.g. undefined diagonals)
/// get zero covariates.
DyadicDesign read_covariates_csv(const std::filesystem::path& path,
                                 std::span<const std::string> nodes,
                                 std::span<const std::string> replicates);

/// Writes i,j,k,y rows; undefined diagonal entries are skipped.
void write_long_csv(std::ostream& out, std::span<const RelationalMatrix> ys,
                    std::span<const std::string> nodes,
                    std::span<const std::string> replicates);

/// Dense 0/1 adjacency CSV (optional header).
BinaryNetwork read_adjacency_csv(const std::filesystem::path& path, bool diagonal_meaningful);

/// Edge list "source,target" of 0-based node indices, optional header.
/// `m` = 0 infers the node count from the largest index.
BinaryNetwork read_edge_list(const std::filesystem::path& path, int m, bool diagonal_meaningful);

struct PowerRun {
  PowerOptions options;
  std::vector<AlternativeSpec> alternatives;
};

/// Run configuration:
///   {"seed": 1, "S": 10000, "n_reps": 2000, "level": 0.05,
///    "curves": [{"kind": "exchangeable", "m": [10], "rho_r": [...], "rho_c": [...]},
///               {"kind": "exchangeable_grid", "m": 10, "n": 7},
///               {"kind": "sparse_pair", "m": [5, 100], "rho": [...]},
///               {"kind": "blockmodel", "m": [10], "mu": [...]}]}
/// Each curve expands to the Cartesian product of its lists.
PowerRun parse_power_config(const nlohmann::json& config, bool full_grid = false);

struct RunHeader {
  std::string command;
  std::uint64_t seed = 0;
  std::int64_t S = 0;
  nlohmann::json spec;
};

void write_power_csv(std::ostream& out, std::span<const PowerPoint> points,
                     const RunHeader& header);
void write_fuzzy_csv(std::ostream& out, const FuzzyPValueSample& sample,
                     const RunHeader& header);

nlohmann::json spec_json(const TestSpec& spec);
nlohmann::json report_json(const TestResult& result, double level,
                           const std::optional<std::string>& cache_file);

}  // namespace matlrt::io
