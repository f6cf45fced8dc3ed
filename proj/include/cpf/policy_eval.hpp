#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cpf/dataset.hpp"

namespace cpf::eval {

/// (1/n) sum_i tau0_i * assign_i: welfare gain over treating nobody.
double oracle_policy_value(std::span<const std::uint8_t> assign, std::span<const double> tau0);

/// Mean of tau0 over treated units; nullopt if the policy treats nobody.
std::optional<double> mean_tau_treated(std::span<const std::uint8_t> assign,
                                       std::span<const double> tau0);

double treated_fraction(std::span<const std::uint8_t> assign);

constexpr double regret(double value, double oracle_value) noexcept {
  return oracle_value - value;
}

/// (1/n) sum_i [a_i D_i Y_i / e_i + (1 - a_i)(1 - D_i) Y_i / (1 - e_i)].
/// Throws InputError on length mismatch or a propensity outside (0, 1).
double ipw_welfare(std::span<const std::uint8_t> assign, const Dataset& ds,
                   std::span<const double> propensity);

struct IpwEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

/// ipw_welfare(assign) - ipw_welfare(all-control), with the sample standard
/// error of the per-unit contributions.
IpwEstimate ipw_gain(std::span<const std::uint8_t> assign, const Dataset& ds,
                     std::span<const double> propensity);

struct EvalRow {
  std::string method;
  double value = 0.0;
  double regret = 0.0;
  double treated_fraction = 0.0;
  std::optional<double> mean_tau_treated;
  std::optional<double> ipw_gain;
};

struct EvalReport {
  std::vector<EvalRow> rows;  ///< oracle first
};

struct NamedPolicy {
  std::string method;
  std::vector<std::uint8_t> assign;
};

/// Builds the report with the oracle (first-best) row first, then `policies`
/// in order. When `ds`/`propensity` are given, IPW gains are filled too.
EvalReport build_report(std::span<const double> tau0, const std::vector<NamedPolicy>& policies,
                        const Dataset* ds = nullptr,
                        std::span<const double> propensity = {});

std::string report_csv(const EvalReport& report);
std::string report_table(const EvalReport& report);

}  // namespace cpf::eval
