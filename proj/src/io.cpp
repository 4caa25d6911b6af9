#include "matlrt/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#ifndef MATLRT_VERSION
#define MATLRT_VERSION "0.1.0"
#endif

namespace matlrt::io {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::optional<double> parse_double(const std::string& s) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return value;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "na" || s == "NaN"; }

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line.front() == '#') continue;
    rows.push_back(split(line));
  }
  if (rows.empty()) throw DataError(path.string() + " is empty");
  return rows;
}

bool looks_like_header(const std::vector<std::string>& row) {
  return std::any_of(row.begin(), row.end(), [](const std::string& f) {
    return !is_missing(f) && !parse_double(f).has_value();
  });
}

std::vector<std::string> ordered_labels(const std::set<std::string>& labels) {
  std::vector<std::string> out(labels.begin(), labels.end());
  const bool numeric = std::all_of(out.begin(), out.end(), [](const std::string& s) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size();
  });
  if (numeric) {
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      return std::stoll(a) < std::stoll(b);
    });
  }
  return out;
}

std::map<std::string, int> index_of(const std::vector<std::string>& labels, const char* what) {
  std::map<std::string, int> idx;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!idx.emplace(labels[i], static_cast<int>(i)).second) {
      throw DataError(std::string("duplicate ") + what + " label '" + labels[i] + "'");
    }
  }
  return idx;
}

std::vector<double> number_list(const nlohmann::json& j, const char* key,
                                std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number()) return {v.get<double>()};
  return v.get<std::vector<double>>();
}

void write_header(std::ostream& out, const RunHeader& header) {
  out << "# matlrt " << version() << " " << header.command << " seed=" << header.seed
      << " S=" << header.S << " spec=" << header.spec.dump() << "\n";
}

}  // namespace

std::string version() { return MATLRT_VERSION; }

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

RelationalMatrix read_dense_csv(const std::filesystem::path& path, bool missing_diagonal) {
  auto rows = read_rows(path);
  if (looks_like_header(rows.front())) rows.erase(rows.begin());
  const auto m = static_cast<int>(rows.size());
  if (m < 2) throw DataError(path.string() + ": matrix needs at least two rows");
  Matrix y(m, m);
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(rows[i].size()) != m) {
      throw DataError(path.string() + ": row " + std::to_string(i + 1) + " has " +
                      std::to_string(rows[i].size()) + " fields, expected " + std::to_string(m));
    }
    for (int j = 0; j < m; ++j) {
      const std::string& f = rows[i][j];
      if (is_missing(f)) {
        if (i != j || !missing_diagonal) {
          throw DataError(path.string() + ": missing value at (" + std::to_string(i + 1) + ", " +
                          std::to_string(j + 1) + "); NA is allowed only on the diagonal with "
                          "--missing-diagonal");
        }
        y(i, j) = 0.0;
        continue;
      }
      const auto v = parse_double(f);
      if (!v) throw DataError(path.string() + ": cannot parse '" + f + "'");
      y(i, j) = *v;
    }
  }
  return RelationalMatrix(std::move(y), !missing_diagonal);
}

void write_dense_csv(std::ostream& out, const Matrix& entries) {
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < entries.cols(); ++j) {
      if (j) out << ',';
      out << format_number(entries(i, j));
    }
    out << '\n';
  }
}

LongData read_long_csv(const std::filesystem::path& path,
                       const std::optional<std::filesystem::path>& sidecar,
                       bool missing_diagonal) {
  const auto rows = read_rows(path);
  const auto& header = rows.front();
  if (header.size() < 4 || header[0] != "i" || header[1] != "j" || header[2] != "k" ||
      header[3] != "y") {
    throw DataError(path.string() + ": long format needs a header starting with i,j,k,y");
  }
  const auto px = static_cast<int>(header.size()) - 4;

  LongData data;
  if (sidecar) {
    std::ifstream in(*sidecar);
    if (!in) throw DataError("cannot open " + sidecar->string());
    const auto config = nlohmann::json::parse(in);
    data.nodes = config.at("nodes").get<std::vector<std::string>>();
    if (config.contains("replicates")) {
      data.replicates = config.at("replicates").get<std::vector<std::string>>();
    }
  }
  if (data.nodes.empty() || data.replicates.empty()) {
    std::set<std::string> nodes, reps;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != header.size()) {
        throw DataError(path.string() + ": line " + std::to_string(r + 1) + " has " +
                        std::to_string(rows[r].size()) + " fields");
      }
      nodes.insert(rows[r][0]);
      nodes.insert(rows[r][1]);
      reps.insert(rows[r][2]);
    }
    if (data.nodes.empty()) data.nodes = ordered_labels(nodes);
    if (data.replicates.empty()) data.replicates = ordered_labels(reps);
  }
  const auto node_idx = index_of(data.nodes, "node");
  const auto rep_idx = index_of(data.replicates, "replicate");
  const auto m = static_cast<int>(data.nodes.size());
  const auto p = static_cast<int>(data.replicates.size());
  if (m < 2) throw DataError(path.string() + ": need at least two nodes");

  std::vector<Matrix> ys(p, Matrix::Zero(m, m));
  std::vector<Matrix> seen(p, Matrix::Zero(m, m));
  Matrix x = Matrix::Zero(Eigen::Index{m} * m * p, px);

  auto lookup = [&](const std::map<std::string, int>& idx, const std::string& key,
                    std::size_t line) {
    const auto it = idx.find(key);
    if (it == idx.end()) {
      throw DataError(path.string() + ": line " + std::to_string(line + 1) +
                      ": unknown label '" + key + "'");
    }
    return it->second;
  };

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f.size() != header.size()) {
      throw DataError(path.string() + ": line " + std::to_string(r + 1) + " has " +
                      std::to_string(f.size()) + " fields");
    }
    const int i = lookup(node_idx, f[0], r);
    const int j = lookup(node_idx, f[1], r);
    const int k = lookup(rep_idx, f[2], r);
    if (seen[k](i, j) != 0.0) {
      throw DataError(path.string() + ": duplicate entry (" + f[0] + ", " + f[1] + ", " + f[2] + ")");
    }
    if (i == j && missing_diagonal) continue;
    if (is_missing(f[3])) {
      if (i == j) continue;
      throw DataError(path.string() + ": line " + std::to_string(r + 1) + ": missing y off the diagonal");
    }
    const auto value = parse_double(f[3]);
    if (!value) throw DataError(path.string() + ": cannot parse '" + f[3] + "'");
    ys[k](i, j) = *value;
    seen[k](i, j) = 1.0;
    for (int c = 0; c < px; ++c) {
      const auto xv = parse_double(f[4 + c]);
      if (!xv) throw DataError(path.string() + ": cannot parse covariate '" + f[4 + c] + "'");
      x(DyadicDesign::row(m, i, j, k), c) = *xv;
    }
  }

  bool diagonal_complete = !missing_diagonal;
  for (int k = 0; k < p; ++k) {
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        if (seen[k](i, j) != 0.0) continue;
        if (i != j) {
          throw DataError(path.string() + ": missing entry (" + data.nodes[i] + ", " +
                          data.nodes[j] + ", " + data.replicates[k] + ")");
        }
        diagonal_complete = false;
      }
    }
  }
  if (!diagonal_complete && !missing_diagonal) {
    throw DataError(path.string() + ": diagonal entries are missing; use --missing-diagonal");
  }

  data.ys.reserve(p);
  for (int k = 0; k < p; ++k) data.ys.emplace_back(std::move(ys[k]), !missing_diagonal);
  if (px > 0) {
    std::vector<std::string> names(header.begin() + 4, header.end());
    data.design = DyadicDesign(m, p, std::move(x), std::move(names));
  }
  return data;
}

DyadicDesign read_covariates_csv(const std::filesystem::path& path,
                                 std::span<const std::string> nodes,
                                 std::span<const std::string> replicates) {
  const auto rows = read_rows(path);
  const auto& header = rows.front();
  if (header.size() < 4 || header[0] != "i" || header[1] != "j" || header[2] != "k") {
    throw DataError(path.string() + ": covariate file needs a header i,j,k,<names>");
  }
  const auto node_idx = index_of({nodes.begin(), nodes.end()}, "node");
  const auto rep_idx = index_of({replicates.begin(), replicates.end()}, "replicate");
  const auto m = static_cast<int>(nodes.size());
  const auto p = static_cast<int>(replicates.size());
  const auto px = static_cast<int>(header.size()) - 3;
  Matrix x = Matrix::Zero(Eigen::Index{m} * m * p, px);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (f.size() != header.size()) {
      throw DataError(path.string() + ": line " + std::to_string(r + 1) + " has " +
                      std::to_string(f.size()) + " fields");
    }
    const auto i = node_idx.find(f[0]);
    const auto j = node_idx.find(f[1]);
    const auto k = rep_idx.find(f[2]);
    if (i == node_idx.end() || j == node_idx.end() || k == rep_idx.end()) {
      throw DataError(path.string() + ": line " + std::to_string(r + 1) + ": unknown label");
    }
    for (int c = 0; c < px; ++c) {
      const auto v = parse_double(f[3 + c]);
      if (!v) throw DataError(path.string() + ": cannot parse covariate '" + f[3 + c] + "'");
      x(DyadicDesign::row(m, i->second, j->second, k->second), c) = *v;
    }
  }
  return DyadicDesign(m, p, std::move(x), {header.begin() + 3, header.end()});
}

void write_long_csv(std::ostream& out, std::span<const RelationalMatrix> ys,
                    std::span<const std::string> nodes,
                    std::span<const std::string> replicates) {
  out << "i,j,k,y\n";
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const auto& y = ys[k];
    for (int i = 0; i < y.m(); ++i) {
      for (int j = 0; j < y.m(); ++j) {
        if (i == j && !y.diagonal_defined()) continue;
        out << nodes[i] << ',' << nodes[j] << ',' << replicates[k] << ','
            << format_number(y.entries()(i, j)) << '\n';
      }
    }
  }
}

BinaryNetwork read_adjacency_csv(const std::filesystem::path& path, bool diagonal_meaningful) {
  auto rows = read_rows(path);
  if (looks_like_header(rows.front())) rows.erase(rows.begin());
  const auto m = static_cast<int>(rows.size());
  Matrix a(m, m);
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(rows[i].size()) != m) {
      throw DataError(path.string() + ": adjacency matrix is not square");
    }
    for (int j = 0; j < m; ++j) {
      const auto v = parse_double(rows[i][j]);
      if (!v) throw DataError(path.string() + ": cannot parse '" + rows[i][j] + "'");
      a(i, j) = *v;
    }
  }
  return BinaryNetwork(std::move(a), diagonal_meaningful);
}

BinaryNetwork read_edge_list(const std::filesystem::path& path, int m, bool diagonal_meaningful) {
  auto rows = read_rows(path);
  if (looks_like_header(rows.front())) rows.erase(rows.begin());
  std::vector<std::pair<long long, long long>> edges;
  long long largest = -1;
  for (const auto& r : rows) {
    if (r.size() != 2) throw DataError(path.string() + ": edge list rows need two fields");
    const auto s = parse_double(r[0]);
    const auto t = parse_double(r[1]);
    if (!s || !t || *s < 0 || *t < 0 || *s != std::floor(*s) || *t != std::floor(*t)) {
      throw DataError(path.string() + ": edge endpoints must be nonnegative integers");
    }
    edges.emplace_back(static_cast<long long>(*s), static_cast<long long>(*t));
    largest = std::max({largest, edges.back().first, edges.back().second});
  }
  if (m <= 0) m = static_cast<int>(largest + 1);
  if (largest >= m) throw DataError(path.string() + ": node index exceeds the node count");
  Matrix a = Matrix::Zero(m, m);
  for (const auto& [s, t] : edges) a(s, t) = 1.0;
  return BinaryNetwork(std::move(a), diagonal_meaningful);
}

PowerRun parse_power_config(const nlohmann::json& config, bool full_grid) {
  PowerRun run;
  run.options.seed = config.value("seed", std::uint64_t{1});
  run.options.S = config.value("S", kInteractiveSamples);
  run.options.n_reps = config.value("n_reps", 2000);
  run.options.level = config.value("level", 0.05);
  run.options.workers = config.value("workers", 0);
  if (!config.contains("curves")) throw DataError("power config needs a 'curves' list");
  for (const auto& curve : config.at("curves")) {
    const auto kind = curve.at("kind").get<std::string>();
    if (kind == "exchangeable_grid") {
      const int n = full_grid ? 25 : curve.value("n", 7);
      for (const auto& alt : exchangeable_grid(curve.at("m").get<int>(), n)) {
        run.alternatives.push_back(alt);
      }
      continue;
    }
    const auto ms = number_list(curve, "m", {});
    if (ms.empty()) throw DataError("power curve needs 'm'");
    for (double md : ms) {
      const int m = static_cast<int>(md);
      switch (parse_alternative_kind(kind)) {
        case AlternativeKind::kExchangeable:
          for (double rr : number_list(curve, "rho_r", {0.0}))
            for (double rc : number_list(curve, "rho_c", {0.0}))
              run.alternatives.push_back(AlternativeSpec::exchangeable(m, rr, rc));
          break;
        case AlternativeKind::kSparsePair:
          for (double r : number_list(curve, "rho", {0.0}))
            run.alternatives.push_back(AlternativeSpec::sparse_pair(m, r));
          break;
        case AlternativeKind::kBlockmodel:
          for (double mu : number_list(curve, "mu", {0.0}))
            run.alternatives.push_back(AlternativeSpec::blockmodel(m, mu));
          break;
      }
    }
  }
  return run;
}

void write_power_csv(std::ostream& out, std::span<const PowerPoint> points,
                     const RunHeader& header) {
  write_header(out, header);
  out << "kind,rho_r,rho_c,rho,mu,m,level,n_reps,rejections,power,mc_se,critical_value\n";
  for (const auto& pt : points) {
    out << to_string(pt.alt.kind) << ',' << format_number(pt.alt.rho_r) << ','
        << format_number(pt.alt.rho_c) << ',' << format_number(pt.alt.rho) << ','
        << format_number(pt.alt.mu) << ',' << pt.alt.m << ',' << format_number(pt.level) << ','
        << pt.n_reps << ',' << pt.rejections << ',' << format_number(pt.power) << ','
        << format_number(pt.mc_se) << ',' << format_number(pt.critical_value) << '\n';
  }
}

void write_fuzzy_csv(std::ostream& out, const FuzzyPValueSample& sample,
                     const RunHeader& header) {
  write_header(out, header);
  out << "iteration,statistic,p_value\n";
  for (const auto& d : sample.draws) {
    out << d.iteration << ',' << format_number(d.statistic) << ',' << format_number(d.p_value)
        << '\n';
  }
}

nlohmann::json spec_json(const TestSpec& spec) {
  return {{"m", spec.m},
          {"p", spec.p},
          {"missing_diagonal", spec.missing_diagonal},
          {"heteroscedastic", spec.heteroscedastic},
          {"S", spec.S},
          {"seed", spec.seed}};
}

nlohmann::json report_json(const TestResult& result, double level,
                           const std::optional<std::string>& cache_file) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["version"] = version();
  j["statistic"] = result.statistic;
  j["p_value"] = result.p_value;
  j["quantile_95"] = result.quantile_95;
  j["level"] = level;
  j["reject"] = result.p_value <= level;
  j["null_summary"] = {{"count", result.null_sample_summary.count},
                       {"mean", result.null_sample_summary.mean},
                       {"sd", result.null_sample_summary.sd}};
  j["spec"] = spec_json(result.spec);
  j["approximate_null"] = result.approximate_null;
  j["cache_file"] = cache_file ? nlohmann::json(*cache_file) : nlohmann::json(nullptr);
  return j;
}

}  // namespace matlrt::io
