#include <cmath>
#include <map>

#include "cpf/errors.hpp"
#include "cpf/rng.hpp"
#include "cpf/synth.hpp"
#include "doctest.h"

using namespace cpf;
using synth::DgpConfig;

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a = Rng::stream(5, 0), b = Rng::stream(5, 0), c = Rng::stream(5, 1);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
}

TEST_CASE("rng uniform_index stays in range and covers it") {
  Rng rng(3);
  std::map<std::uint64_t, int> counts;
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.uniform_index(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  CHECK(counts.size() == 7);
  for (auto [v, c] : counts) CHECK(c > 800);
}

TEST_CASE("rng normal has unit moments") {
  Rng rng(11);
  const int n = 200000;
  double s = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    ss += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(ss / n - 1.0) < 0.015);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(synth::check(DgpConfig{}));
  CHECK_THROWS_AS(synth::check({.n = 0}), ConfigError);
  CHECK_THROWS_AS(synth::check({.p = 1}), ConfigError);
  CHECK_THROWS_AS(synth::check({.epsilon = 0.0}), ConfigError);
  CHECK_THROWS_AS(synth::check({.epsilon = 0.5}), ConfigError);
  CHECK_THROWS_AS(synth::check({.noise_sd = -1.0}), ConfigError);
}

TEST_CASE("zero-noise single row: y equals b(x) + D tau(x)") {
  const auto sd = synth::generate({.n = 1, .p = 2, .epsilon = 0.1, .noise_sd = 0.0, .seed = 7});
  const auto x = sd.base.row(0);
  const double expected = synth::baseline(x) + (sd.base.treated(0) ? synth::cate(x) : 0.0);
  CHECK(sd.base.outcome(0) == expected);
  CHECK(sd.y0[0] == synth::baseline(x));
  CHECK(sd.tau0[0] == x[0] + std::max(x[1], 0.0));
}

TEST_CASE("propensity respects the overlap floor") {
  const auto sd = synth::generate({.n = 100000, .p = 2, .epsilon = 0.1, .seed = 3});
  double lo = 1, hi = 0;
  for (double e : sd.propensity) {
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  CHECK(lo >= 0.1);
  CHECK(hi <= 0.9);
}

TEST_CASE("ground truth is consistent with the observed data") {
  const auto sd = synth::generate({.n = 5000, .p = 5, .seed = 21});
  for (std::size_t i = 0; i < sd.base.num_rows(); ++i) {
    const auto x = sd.base.row(i);
    REQUIRE(sd.base.outcome(i) == (sd.base.treated(i) ? sd.y1[i] : sd.y0[i]));
    REQUIRE(sd.tau0[i] == synth::cate(x));
    REQUIRE(sd.propensity[i] == synth::propensity(x, 0.1));
  }
}

TEST_CASE("generation is bit-identical for identical configs") {
  const DgpConfig cfg{.n = 2000, .p = 6, .epsilon = 0.2, .noise_sd = 0.5, .seed = 1234};
  const auto a = synth::generate(cfg);
  const auto b = synth::generate(cfg);
  CHECK(a.base.covariates() == b.base.covariates());
  CHECK(a.base.treatments() == b.base.treatments());
  CHECK(a.base.outcomes() == b.base.outcomes());
  CHECK(a.y0 == b.y0);
  CHECK(a.y1 == b.y1);
  CHECK(synth::generate({.seed = 1235}).base.covariates() !=
        synth::generate({.seed = 1234}).base.covariates());
}

TEST_CASE("treatment is unconfounded given the propensity coordinate") {
  // Within narrow x0 bins, D is independent of the remaining covariates, so
  // the unit-level effect y1 - y0 has the same mean in both arms.
  const auto sd = synth::generate({.n = 200000, .p = 3, .seed = 5});
  constexpr int kBins = 10;
  std::vector<double> sum1(kBins), sum0(kBins), sq1(kBins), sq0(kBins);
  std::vector<int> n1(kBins), n0(kBins);
  for (std::size_t i = 0; i < sd.base.num_rows(); ++i) {
    const double x0 = sd.base.covariate(i, 0);
    if (x0 < -1.0 || x0 >= 1.0) continue;
    const int bin = static_cast<int>((x0 + 1.0) / 0.2);
    const double effect = sd.y1[i] - sd.y0[i];
    if (sd.base.treated(i)) {
      sum1[bin] += effect;
      sq1[bin] += effect * effect;
      ++n1[bin];
    } else {
      sum0[bin] += effect;
      sq0[bin] += effect * effect;
      ++n0[bin];
    }
  }
  for (int b = 0; b < kBins; ++b) {
    const double m1 = sum1[b] / n1[b], m0 = sum0[b] / n0[b];
    const double v1 = sq1[b] / n1[b] - m1 * m1, v0 = sq0[b] / n0[b] - m0 * m0;
    const double se = std::sqrt(v1 / n1[b] + v0 / n0[b]);
    CHECK(std::abs(m1 - m0) < 4.0 * se);
  }
}

TEST_CASE("oracle policy value of the reference design") {
  // Frozen from this generator; the population value
  // E[max(0, X0 + max(0, X1))] = 0.681037 (2-d quadrature) is within one
  // standard error of it.
  const auto sd = synth::generate({.n = 10000, .p = 10, .epsilon = 0.1, .noise_sd = 1.0,
                                   .seed = 20250101});
  double total = 0.0;
  for (double t : sd.tau0) total += t >= 0.0 ? t : 0.0;
  const double v_star = total / 10000.0;
  CHECK(v_star > 0.0);
  CHECK(v_star == doctest::Approx(0.67904748818495408).epsilon(1e-12));
  CHECK(std::abs(v_star - 0.6810367993634631) < 3.0 * 0.0085);
}

TEST_CASE("true_first_best treats ties") {
  const std::vector<double> tau{-1.0, 0.0, 2.0};
  CHECK(synth::true_first_best(tau) == std::vector<std::uint8_t>{0, 1, 1});
  const std::vector<double> neg{-0.1, -3.0, -1e-300};
  CHECK(synth::true_first_best(neg) == std::vector<std::uint8_t>{0, 0, 0});

  Rng rng(17);
  std::vector<double> random(500);
  for (double& t : random) t = rng.normal();
  const auto pi = synth::true_first_best(random);
  for (std::size_t i = 0; i < random.size(); ++i) CHECK(pi[i] == (random[i] >= 0.0 ? 1 : 0));
}
