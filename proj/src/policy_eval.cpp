#include "cpf/policy_eval.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "cpf/csv.hpp"
#include "cpf/errors.hpp"
#include "cpf/synth.hpp"

namespace cpf::eval {
namespace {

void check_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InputError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

double oracle_policy_value(std::span<const std::uint8_t> assign, std::span<const double> tau0) {
  check_length(assign.size(), tau0.size(), "oracle_policy_value");
  double sum = 0.0;
  for (std::size_t i = 0; i < tau0.size(); ++i) {
    if (assign[i]) sum += tau0[i];
  }
  return sum / static_cast<double>(tau0.size());
}

std::optional<double> mean_tau_treated(std::span<const std::uint8_t> assign,
                                       std::span<const double> tau0) {
  check_length(assign.size(), tau0.size(), "mean_tau_treated");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < tau0.size(); ++i) {
    if (!assign[i]) continue;
    sum += tau0[i];
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

double treated_fraction(std::span<const std::uint8_t> assign) {
  std::size_t count = 0;
  for (auto a : assign) count += a ? 1 : 0;
  return assign.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(assign.size());
}

namespace {

void check_ipw_inputs(std::span<const std::uint8_t> assign, const Dataset& ds,
                      std::span<const double> propensity) {
  check_length(assign.size(), ds.num_rows(), "ipw_welfare");
  check_length(propensity.size(), ds.num_rows(), "ipw_welfare");
  for (std::size_t i = 0; i < propensity.size(); ++i) {
    if (!(propensity[i] > 0.0 && propensity[i] < 1.0)) {
      throw InputError("propensity at row " + std::to_string(i) + " is outside (0, 1)");
    }
  }
}

}  // namespace

double ipw_welfare(std::span<const std::uint8_t> assign, const Dataset& ds,
                   std::span<const double> propensity) {
  check_ipw_inputs(assign, ds, propensity);
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.num_rows(); ++i) {
    const double y = ds.outcome(i);
    if (assign[i] && ds.treated(i)) {
      sum += y / propensity[i];
    } else if (!assign[i] && !ds.treated(i)) {
      sum += y / (1.0 - propensity[i]);
    }
  }
  return sum / static_cast<double>(ds.num_rows());
}

IpwEstimate ipw_gain(std::span<const std::uint8_t> assign, const Dataset& ds,
                     std::span<const double> propensity) {
  check_ipw_inputs(assign, ds, propensity);
  const std::size_t n = ds.num_rows();
  std::vector<double> contrib(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!assign[i]) continue;
    const double y = ds.outcome(i);
    contrib[i] = ds.treated(i) ? y / propensity[i] : -y / (1.0 - propensity[i]);
  }
  double mean = 0.0;
  for (double c : contrib) mean += c;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double c : contrib) ss += (c - mean) * (c - mean);
  IpwEstimate est;
  est.estimate = mean;
  est.standard_error = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))
                             : 0.0;
  return est;
}

EvalReport build_report(std::span<const double> tau0, const std::vector<NamedPolicy>& policies,
                        const Dataset* ds, std::span<const double> propensity) {
  auto make_row = [&](const std::string& name, const std::vector<std::uint8_t>& assign) {
    EvalRow row;
    row.method = name;
    row.value = oracle_policy_value(assign, tau0);
    row.treated_fraction = treated_fraction(assign);
    row.mean_tau_treated = mean_tau_treated(assign, tau0);
    if (ds != nullptr) row.ipw_gain = ipw_gain(assign, *ds, propensity).estimate;
    return row;
  };

  EvalReport report;
  report.rows.push_back(make_row("Oracle policy", synth::true_first_best(tau0)));
  for (const auto& p : policies) report.rows.push_back(make_row(p.method, p.assign));
  const double oracle_value = report.rows.front().value;
  for (auto& row : report.rows) row.regret = regret(row.value, oracle_value);
  return report;
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "method,policy_value,regret,treated_fraction,mean_tau_treated,ipw_gain\n";
  for (const auto& r : report.rows) {
    out << r.method << ',' << format_double(r.value) << ',' << format_double(r.regret) << ','
        << format_double(r.treated_fraction) << ','
        << (r.mean_tau_treated ? format_double(*r.mean_tau_treated) : "") << ','
        << (r.ipw_gain ? format_double(*r.ipw_gain) : "") << '\n';
  }
  return out.str();
}

std::string report_table(const EvalReport& report) {
  std::size_t width = std::string("Method").size();
  for (const auto& r : report.rows) width = std::max(width, r.method.size());

  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s  %12s  %8s  %8s  %14s\n", static_cast<int>(width),
                "Method", "Policy value", "Regret", "Treated", "Mean tau|treat");
  out << line;
  out << std::string(width + 2 + 12 + 2 + 8 + 2 + 8 + 2 + 14, '-') << '\n';
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof(line), "%-*s  %12s  %8s  %8s  %14s\n", static_cast<int>(width),
                  r.method.c_str(), fixed4(r.value).c_str(), fixed4(r.regret).c_str(),
                  fixed4(r.treated_fraction).c_str(),
                  r.mean_tau_treated ? fixed4(*r.mean_tau_treated).c_str() : "NA");
    out << line;
  }
  return out.str();
}

}  // namespace cpf::eval
