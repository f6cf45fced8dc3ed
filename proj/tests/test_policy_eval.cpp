#include <cmath>
#include <string>

#include "cpf/errors.hpp"
#include "cpf/policy_eval.hpp"
#include "cpf/rng.hpp"
#include "cpf/synth.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cpf;
using namespace cpf::eval;

namespace {

std::vector<std::uint8_t> random_policy(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> a(n);
  for (auto& v : a) v = rng.bernoulli(0.5) ? 1 : 0;
  return a;
}

}  // namespace

TEST_CASE("policy value basics") {
  const std::vector<double> tau{-1.0, 0.5, 2.0, -0.25};
  CHECK(oracle_policy_value(std::vector<std::uint8_t>(4, 0), tau) == 0.0);
  const auto best = synth::true_first_best(tau);
  CHECK(oracle_policy_value(best, tau) == doctest::Approx(2.5 / 4));
  CHECK(*mean_tau_treated(best, tau) == doctest::Approx(1.25));
  CHECK_FALSE(mean_tau_treated(std::vector<std::uint8_t>(4, 0), tau).has_value());
  CHECK(treated_fraction(best) == 0.5);
  CHECK_THROWS_AS(oracle_policy_value(std::vector<std::uint8_t>(3, 0), tau), InputError);
}

TEST_CASE("first-best dominates and regret is the disagreement gap") {
  const auto sd = synth::generate({.n = 5000, .p = 3, .seed = 3});
  const auto best = synth::true_first_best(sd.tau0);
  const double v_star = oracle_policy_value(best, sd.tau0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto pi = random_policy(sd.tau0.size(), s);
    const double v = oracle_policy_value(pi, sd.tau0);
    CHECK(v <= v_star);
    CHECK(regret(v, v_star) == doctest::Approx(oracle::disagreement_gap(pi, sd.tau0)).epsilon(1e-12));
  }
}

TEST_CASE("regret arithmetic against the published table") {
  CHECK(regret(0.1730, 0.1833) == doctest::Approx(0.0103).epsilon(1e-12));
  CHECK(regret(0.1247, 0.1833) == doctest::Approx(0.0586).epsilon(1e-12));
  CHECK(regret(0.42, 0.42) == 0.0);
}

TEST_CASE("IPW with constant propensity 1/2 is the Horvitz-Thompson mean") {
  const auto sd = synth::generate({.n = 1000, .p = 3, .seed = 4});
  const std::vector<double> half(1000, 0.5);
  const std::vector<std::uint8_t> all(1000, 1);
  double dy = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) dy += sd.base.treated(i) ? sd.base.outcome(i) : 0.0;
  CHECK(ipw_welfare(all, sd.base, half) == doctest::Approx(2.0 * dy / 1000).epsilon(1e-12));
}

TEST_CASE("IPW welfare gain is unbiased for the oracle welfare gain") {
  const auto sd = synth::generate({.n = 10000, .p = 5, .seed = 5});
  const auto best = synth::true_first_best(sd.tau0);
  for (const auto& pi : {best, random_policy(10000, 6)}) {
    const IpwEstimate g = ipw_gain(pi, sd.base, sd.propensity);
    const double truth = oracle_policy_value(pi, sd.tau0);
    CHECK(std::abs(g.estimate - truth) < 3.0 * g.standard_error);
    const std::vector<std::uint8_t> none(10000, 0);
    CHECK(g.estimate == doctest::Approx(ipw_welfare(pi, sd.base, sd.propensity) -
                                        ipw_welfare(none, sd.base, sd.propensity))
                            .epsilon(1e-9));
  }
}

TEST_CASE("IPW of the all-control policy estimates E[Y0]") {
  const auto sd = synth::generate({.n = 10000, .p = 5, .seed = 7});
  const std::vector<std::uint8_t> none(10000, 0);
  const double est = ipw_welfare(none, sd.base, sd.propensity);
  std::vector<double> contrib(10000);
  double mean_y0 = 0.0;
  for (std::size_t i = 0; i < 10000; ++i) {
    contrib[i] = sd.base.treated(i) ? 0.0 : sd.base.outcome(i) / (1.0 - sd.propensity[i]);
    mean_y0 += sd.y0[i] / 10000.0;
  }
  double m = 0, ss = 0;
  for (double c : contrib) m += c / 10000.0;
  for (double c : contrib) ss += (c - m) * (c - m);
  const double se = std::sqrt(ss / 9999.0 / 10000.0);
  CHECK(std::abs(est - mean_y0) < 3.0 * se);
}

TEST_CASE("IPW is invariant to relabeling units") {
  const auto sd = synth::generate({.n = 500, .p = 3, .seed = 8});
  const auto pi = random_policy(500, 9);
  std::vector<std::size_t> perm(500);
  for (std::size_t i = 0; i < 500; ++i) perm[i] = i;
  Rng rng(10);
  rng.shuffle(std::span(perm));
  std::vector<double> x, y, e;
  std::vector<std::uint8_t> d, a;
  for (std::size_t i : perm) {
    for (double v : sd.base.row(i)) x.push_back(v);
    d.push_back(sd.base.treatments()[i]);
    y.push_back(sd.base.outcome(i));
    e.push_back(sd.propensity[i]);
    a.push_back(pi[i]);
  }
  const Dataset shuffled(x, 3, d, y);
  CHECK(ipw_welfare(a, shuffled, e) ==
        doctest::Approx(ipw_welfare(pi, sd.base, sd.propensity)).epsilon(1e-12));
}

TEST_CASE("IPW rejects propensities outside (0, 1)") {
  const auto sd = synth::generate({.n = 10, .p = 2, .seed = 1});
  std::vector<double> e(10, 0.5);
  const std::vector<std::uint8_t> a(10, 1);
  e[3] = 1.0;
  CHECK_THROWS_AS(ipw_welfare(a, sd.base, e), InputError);
  e[3] = 0.0;
  CHECK_THROWS_AS(ipw_welfare(a, sd.base, e), InputError);
  CHECK_THROWS_AS(ipw_welfare(a, sd.base, std::vector<double>(9, 0.5)), InputError);
}

TEST_CASE("report: oracle first, exact regret identity, table layout") {
  const auto sd = synth::generate({.n = 3000, .p = 3, .seed = 12});
  const EvalReport r = build_report(
      sd.tau0, {{"Causal-policy forest", random_policy(3000, 1)}, {"Other", random_policy(3000, 2)}},
      &sd.base, sd.propensity);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].method == "Oracle policy");
  CHECK(r.rows[0].regret == 0.0);
  for (const auto& row : r.rows) {
    CHECK(row.regret == r.rows[0].value - row.value);
    CHECK(row.regret >= 0.0);
    CHECK(row.ipw_gain.has_value());
  }
  const std::string table = report_table(r);
  CHECK(table.rfind("Method", 0) == 0);
  CHECK(table.find("Policy value") != std::string::npos);
  CHECK(table.find("0.0000") != std::string::npos);
  CHECK(table.find("Oracle policy") < table.find("Causal-policy forest"));
  const std::string csv = report_csv(r);
  CHECK(csv.rfind("method,policy_value,regret,treated_fraction,mean_tau_treated,ipw_gain\n", 0) == 0);
}
