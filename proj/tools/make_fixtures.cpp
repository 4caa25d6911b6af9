// Regenerates the bundled data files from their recorded seeds:
//   matlrt_make_fixtures <output-dir>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "matlrt/core.hpp"
#include "matlrt/io.hpp"
#include "matlrt/meanmodel.hpp"

namespace fs = std::filesystem;
using namespace matlrt;

namespace {

constexpr std::uint64_t kExchangeableSeed = 20080801;
constexpr std::uint64_t kGraphSeed = 4242;
constexpr std::uint64_t kTradeSeed = 1996;

std::ofstream open(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_identity(const fs::path& dir) {
  auto out = open(dir / "identity5.csv");
  io::write_dense_csv(out, Matrix::Identity(5, 5));
}

void write_exchangeable(const fs::path& dir) {
  const int m = 20;
  const Matrix r = exchangeable_correlation(m, 0.8);
  RngStream rng(kExchangeableSeed, 0);
  const RelationalMatrix y = sample_matrix_normal(m, SeparableCovariance(r, r), rng);
  auto out = open(dir / "exchangeable_rho08_m20.csv");
  io::write_dense_csv(out, y.entries());
}

void write_random_graph(const fs::path& dir) {
  const int m = 30;
  RngStream rng(kGraphSeed, 0);
  Matrix a = Matrix::Zero(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      if (i != j && rng.uniform() < 0.1) a(i, j) = 1.0;
  auto out = open(dir / "random_graph_m30.csv");
  io::write_dense_csv(out, a);
}

void write_trade_panel(const fs::path& dir) {
  const int m = 26;
  const int p = 13;
  RngStream rng(kTradeSeed, 0);
  const Matrix r = exchangeable_correlation(m, 0.3);
  Vector scales(p);
  for (int k = 0; k < p; ++k) scales(k) = 0.01 * (1.0 + 0.25 * k);
  const TradePanel panel =
      simulate_trade_panel(m, p, 0.8, 0.6, SeparableCovariance(r, Matrix::Identity(m, m)), scales, rng);

  auto out = open(dir / "trade_panel.csv");
  out << "i,j,k,y,gdp_exporter,gdp_importer\n";
  char label_i[16], label_j[16];
  for (int k = 0; k < p; ++k) {
    for (int i = 0; i < m; ++i) {
      std::snprintf(label_i, sizeof label_i, "c%02d", i);
      for (int j = 0; j < m; ++j) {
        if (i == j) continue;
        std::snprintf(label_j, sizeof label_j, "c%02d", j);
        out << label_i << ',' << label_j << ',' << 1996 + k << ','
            << io::format_number(panel.ys[k].entries()(i, j)) << ','
            << io::format_number(panel.node_covariate(i, k)) << ','
            << io::format_number(panel.node_covariate(j, k)) << '\n';
      }
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: matlrt_make_fixtures <output-dir>\n";
    return 2;
  }
  try {
    const fs::path dir = argv[1];
    fs::create_directories(dir);
    write_identity(dir);
    write_exchangeable(dir);
    write_random_graph(dir);
    write_trade_panel(dir);
  } catch (const std::exception& e) {
    std::cerr << "matlrt_make_fixtures: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
