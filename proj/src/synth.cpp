#include "cpf/synth.hpp"

#include <cmath>
#include <string>

#include "cpf/errors.hpp"
#include "cpf/rng.hpp"

namespace cpf::synth {
namespace {

constexpr std::uint64_t kCovariateStream = 0;
constexpr std::uint64_t kTreatmentStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void check(const DgpConfig& cfg) {
  if (cfg.n < 1) throw ConfigError("dgp: n must be >= 1");
  if (cfg.p < 2) throw ConfigError("dgp: p must be >= 2");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 0.5)) {
    throw ConfigError("dgp: epsilon must lie in (0, 0.5), got " + std::to_string(cfg.epsilon));
  }
  if (!(cfg.noise_sd >= 0.0) || !std::isfinite(cfg.noise_sd)) {
    throw ConfigError("dgp: noise_sd must be finite and >= 0");
  }
}

double cate(std::span<const double> x) { return x[0] + (x[1] > 0.0 ? x[1] : 0.0); }

double propensity(std::span<const double> x, double epsilon) {
  return epsilon + (1.0 - 2.0 * epsilon) * logistic(x[0]);
}

double baseline(std::span<const double> x) { return x.size() > 2 ? 0.5 * x[2] : 0.0; }

SyntheticDataset generate(const DgpConfig& cfg) {
  check(cfg);
  const std::size_t n = cfg.n;
  const std::size_t p = cfg.p;

  Rng x_rng = Rng::stream(cfg.seed, kCovariateStream);
  Rng d_rng = Rng::stream(cfg.seed, kTreatmentStream);
  Rng u_rng = Rng::stream(cfg.seed, kNoiseStream);

  std::vector<double> x(n * p);
  for (double& v : x) v = x_rng.normal();

  SyntheticDataset sd;
  sd.tau0.resize(n);
  sd.propensity.resize(n);
  sd.y0.resize(n);
  sd.y1.resize(n);
  std::vector<std::uint8_t> d(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<const double> xi(x.data() + i * p, p);
    sd.tau0[i] = cate(xi);
    sd.propensity[i] = propensity(xi, cfg.epsilon);
    d[i] = d_rng.bernoulli(sd.propensity[i]) ? 1 : 0;
    const double noise = cfg.noise_sd * u_rng.normal();
    const double b = baseline(xi);
    sd.y0[i] = b + noise;
    sd.y1[i] = b + sd.tau0[i] + noise;
    y[i] = d[i] ? sd.y1[i] : sd.y0[i];
  }
  sd.base = Dataset(std::move(x), p, std::move(d), std::move(y));
  return sd;
}

std::vector<std::uint8_t> true_first_best(std::span<const double> tau0) {
  std::vector<std::uint8_t> out(tau0.size());
  for (std::size_t i = 0; i < tau0.size(); ++i) out[i] = tau0[i] >= 0.0 ? 1 : 0;
  return out;
}

}  // namespace cpf::synth
