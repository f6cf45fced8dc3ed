#include "cpf/equivalence.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "cpf/errors.hpp"
#include "cpf/rng.hpp"

namespace cpf::equivalence {
namespace {

void check_lengths(const FinitePolicyClass& pc, std::size_t len) {
  if (len != pc.num_rows()) {
    throw InputError("vector length " + std::to_string(len) + " != class rows " +
                     std::to_string(pc.num_rows()));
  }
}

CellPolicy policy_from_mask(std::uint32_t mask, std::size_t m) {
  CellPolicy pi(m);
  for (std::size_t c = 0; c < m; ++c) pi[c] = (mask >> c) & 1U;
  return pi;
}

// Collects every candidate whose objective is within tolerance of the best.
template <class Candidate>
std::set<Candidate> optimal_set(const std::vector<Candidate>& candidates,
                                const std::vector<double>& objective, bool maximize) {
  double best = maximize ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
  for (double v : objective) best = maximize ? std::max(best, v) : std::min(best, v);
  std::set<Candidate> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double gap = maximize ? best - objective[i] : objective[i] - best;
    if (gap <= kTieTolerance) out.insert(candidates[i]);
  }
  return out;
}

}  // namespace

FinitePolicyClass::FinitePolicyClass(std::vector<std::vector<std::size_t>> cells, std::size_t n)
    : cells_(std::move(cells)), cell_of_(n, std::numeric_limits<std::size_t>::max()) {
  if (cells_.size() > kMaxCells) {
    throw InputError("policy class too large: " + std::to_string(cells_.size()) +
                     " cells (max " + std::to_string(kMaxCells) + ")");
  }
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    for (std::size_t i : cells_[c]) {
      if (i >= n) throw InputError("cell index out of range: " + std::to_string(i));
      if (cell_of_[i] != std::numeric_limits<std::size_t>::max()) {
        throw InputError("index " + std::to_string(i) + " appears in two cells");
      }
      cell_of_[i] = c;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (cell_of_[i] == std::numeric_limits<std::size_t>::max()) {
      throw InputError("index " + std::to_string(i) + " is not covered by any cell");
    }
  }
}

std::set<CellPolicy> brute_force_welfare_argmax(const FinitePolicyClass& pc,
                                                std::span<const double> y1,
                                                std::span<const double> y0) {
  check_lengths(pc, y1.size());
  check_lengths(pc, y0.size());
  const std::size_t m = pc.num_cells();
  const std::size_t n = pc.num_rows();
  std::vector<CellPolicy> policies;
  std::vector<double> welfare;
  for (std::uint32_t mask = 0; mask < (1U << m); ++mask) {
    CellPolicy pi = policy_from_mask(mask, m);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = pi[pc.cell_of(i)];
      total += y1[i] * a + y0[i] * (1.0 - a);
    }
    welfare.push_back(total / static_cast<double>(n));
    policies.push_back(std::move(pi));
  }
  return optimal_set(policies, welfare, /*maximize=*/true);
}

std::set<CellSigns> brute_force_restricted_lsq_argmin(const FinitePolicyClass& pc,
                                                      std::span<const double> tau) {
  check_lengths(pc, tau.size());
  const std::size_t m = pc.num_cells();
  const std::size_t n = pc.num_rows();
  std::vector<CellSigns> signs;
  std::vector<double> mse;
  for (std::uint32_t mask = 0; mask < (1U << m); ++mask) {
    CellSigns g(m);
    for (std::size_t c = 0; c < m; ++c) g[c] = ((mask >> c) & 1U) ? 1 : -1;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = tau[i] - g[pc.cell_of(i)];
      total += r * r;
    }
    mse.push_back(total / static_cast<double>(n));
    signs.push_back(std::move(g));
  }
  return optimal_set(signs, mse, /*maximize=*/false);
}

CellSigns to_signs(const CellPolicy& pi) {
  CellSigns g(pi.size());
  for (std::size_t c = 0; c < pi.size(); ++c) g[c] = static_cast<std::int8_t>(2 * pi[c] - 1);
  return g;
}

namespace {

bool compare_sides(const FinitePolicyClass& pc, std::span<const double> y1,
                   std::span<const double> y0, bool flip) {
  std::vector<double> tau(y1.size());
  for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = (flip ? -1.0 : 1.0) * (y1[i] - y0[i]);
  std::set<CellSigns> mapped;
  for (const auto& pi : brute_force_welfare_argmax(pc, y1, y0)) mapped.insert(to_signs(pi));
  return mapped == brute_force_restricted_lsq_argmin(pc, tau);
}

}  // namespace

bool check_theorem1(const FinitePolicyClass& pc, std::span<const double> y1,
                    std::span<const double> y0) {
  return compare_sides(pc, y1, y0, false);
}

SuiteResult run_theorem_suite(std::size_t trials, std::uint64_t seed,
                              const SuiteOptions& options) {
  SuiteResult result;
  result.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = Rng::stream(seed, t);
    const std::size_t m = 1 + rng.uniform_index(options.max_cells);
    const std::size_t n =
        options.min_rows + rng.uniform_index(options.max_rows - options.min_rows + 1);

    std::vector<std::vector<std::size_t>> cells(m);
    for (std::size_t i = 0; i < n; ++i) cells[rng.uniform_index(m)].push_back(i);

    std::vector<double> y1(n), y0(n);
    switch (t % 4) {
      case 0:
      case 1:
        for (std::size_t i = 0; i < n; ++i) {
          y1[i] = rng.normal();
          y0[i] = rng.normal();
        }
        break;
      case 2:
        // Integer outcomes give exact cell-level ties.
        for (std::size_t i = 0; i < n; ++i) {
          y1[i] = static_cast<double>(rng.uniform_index(5)) - 2.0;
          y0[i] = static_cast<double>(rng.uniform_index(5)) - 2.0;
        }
        break;
      default:
        for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] = rng.normal();
        break;
    }

    const FinitePolicyClass pc(std::move(cells), n);
    if (compare_sides(pc, y1, y0, options.inject_sign_flip)) ++result.passed;
  }
  return result;
}

}  // namespace cpf::equivalence
