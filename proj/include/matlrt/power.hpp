#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "matlrt/core.hpp"
#include "matlrt/lrt.hpp"

namespace matlrt {

enum class AlternativeKind { kExchangeable, kSparsePair, kBlockmodel };

std::string to_string(AlternativeKind kind);
AlternativeKind parse_alternative_kind(const std::string& name);

/// A data-generating alternative for power studies.
///  - exchangeable: Sigma_r = (1 - rho_r) I + rho_r 11^t, same for Sigma_c.
///  - sparse_pair:  Sigma_r = I + rho (E_12 + E_21), Sigma_c = I.
///  - blockmodel:   y_ij = u_i^t W v_j + e_ij with W = [[0, -mu], [mu, 0]] and
///                  two row and two column groups drawn Bernoulli(1/2).
struct AlternativeSpec {
  AlternativeKind kind = AlternativeKind::kExchangeable;
  int m = 0;
  double rho_r = 0.0;
  double rho_c = 0.0;
  double rho = 0.0;
  double mu = 0.0;

  static AlternativeSpec exchangeable(int m, double rho_r, double rho_c);
  static AlternativeSpec sparse_pair(int m, double rho);
  static AlternativeSpec blockmodel(int m, double mu);

  void validate() const;
};

RelationalMatrix sample_alternative(const AlternativeSpec& alt, RngStream& rng);

struct PowerPoint {
  AlternativeSpec alt;
  double level = 0.05;
  double critical_value = 0.0;
  int n_reps = 0;
  int rejections = 0;
  double power = 0.0;
  double mc_se = 0.0;
};

struct PowerOptions {
  int n_reps = 2000;
  double level = 0.05;
  std::int64_t S = kInteractiveSamples;  // null sample size per m
  std::uint64_t seed = 1;
  int workers = 0;
};

/// Monte Carlo power of the level-`level` test against each alternative.
/// Rejection means statistic > the (1 - level) null quantile for that m.
/// Replicate r of point i uses stream (i << 32 | r) of a seed derived from
/// options.seed, so results do not depend on scheduling.
std::vector<PowerPoint> power_curve(std::span<const AlternativeSpec> alts,
                                    const PowerOptions& options,
                                    const QuantileCache* cache = nullptr);

/// n x n grid of exchangeable alternatives strictly inside the positive
/// definite range (-1/(m-1), 1) for both factors.
std::vector<AlternativeSpec> exchangeable_grid(int m, int n);

}  // namespace matlrt
