#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cpf/dataset.hpp"

namespace cpf::synth {

/// Confounded observational design with known ground truth:
///
///   X ~ N(0, I_p)
///   e(x)   = epsilon + (1 - 2 epsilon) * logistic(x0)
///   tau(x) = x0 + x1 * 1[x1 > 0]
///   b(x)   = 0.5 * x2            (0 when p == 2)
///   D ~ Bernoulli(e(X)),  Y0 = b(X) + u,  Y1 = b(X) + tau(X) + u,  u ~ N(0, noise_sd^2)
///
/// Columns are 0-based; the same noise draw u enters both potential outcomes.
struct DgpConfig {
  std::size_t n = 10000;
  std::size_t p = 10;
  double epsilon = 0.1;
  double noise_sd = 1.0;
  std::uint64_t seed = 20250101;
};

/// Throws ConfigError unless n >= 1, p >= 2, 0 < epsilon < 0.5, noise_sd >= 0.
void check(const DgpConfig& cfg);

double cate(std::span<const double> x);
double propensity(std::span<const double> x, double epsilon);
double baseline(std::span<const double> x);

struct SyntheticDataset {
  Dataset base;
  std::vector<double> tau0;
  std::vector<double> propensity;
  std::vector<double> y0;
  std::vector<double> y1;
};

/// Deterministic in cfg. Covariates, treatment draws and noise come from
/// separate RNG streams of cfg.seed, so e.g. changing noise_sd leaves X and
/// D unchanged.
SyntheticDataset generate(const DgpConfig& cfg);

/// 1 where tau0 >= 0 (ties treat).
std::vector<std::uint8_t> true_first_best(std::span<const double> tau0);
inline std::vector<std::uint8_t> true_first_best(const SyntheticDataset& sd) {
  return true_first_best(sd.tau0);
}

}  // namespace cpf::synth
