#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <vector>

namespace cpf::equivalence {

/// Exhaustive enumeration over 2^M policies is capped at this many cells.
inline constexpr std::size_t kMaxCells = 12;
/// Objective values within this distance of the optimum count as optimal.
inline constexpr double kTieTolerance = 1e-12;

/// Partition of {0..n-1} into M cells; a policy picks one action per cell,
/// so the class has 2^M members.
class FinitePolicyClass {
 public:
  /// Throws InputError if cells overlap, miss an index, or M > kMaxCells.
  FinitePolicyClass(std::vector<std::vector<std::size_t>> cells, std::size_t n);

  std::size_t num_cells() const noexcept { return cells_.size(); }
  std::size_t num_rows() const noexcept { return cell_of_.size(); }
  std::size_t cell_of(std::size_t row) const { return cell_of_[row]; }
  const std::vector<std::vector<std::size_t>>& cells() const noexcept { return cells_; }

 private:
  std::vector<std::vector<std::size_t>> cells_;
  std::vector<std::size_t> cell_of_;
};

/// Per-cell action in {0,1}.
using CellPolicy = std::vector<std::uint8_t>;
/// Per-cell restricted prediction in {-1,1}.
using CellSigns = std::vector<std::int8_t>;

/// All policies maximizing the sample welfare mean(y1*pi + y0*(1-pi)).
std::set<CellPolicy> brute_force_welfare_argmax(const FinitePolicyClass& pc,
                                                std::span<const double> y1,
                                                std::span<const double> y0);

/// All g in {-1,1}^M minimizing mean((tau - g)^2).
std::set<CellSigns> brute_force_restricted_lsq_argmin(const FinitePolicyClass& pc,
                                                      std::span<const double> tau);

CellSigns to_signs(const CellPolicy& pi);

/// True iff {2*pi - 1 : pi in welfare argmax} == restricted-LSQ argmin with
/// tau = y1 - y0.
bool check_theorem1(const FinitePolicyClass& pc, std::span<const double> y1,
                    std::span<const double> y0);

struct SuiteOptions {
  std::size_t max_cells = 8;
  std::size_t min_rows = 4;
  std::size_t max_rows = 64;
  /// Test hook: negate tau on the least-squares side. The suite must fail.
  bool inject_sign_flip = false;
};

struct SuiteResult {
  std::size_t trials = 0;
  std::size_t passed = 0;
  std::size_t failed() const noexcept { return trials - passed; }
};

/// Randomized check over `trials` instances drawn from `seed`. Instances mix
/// Gaussian outcomes, small-integer outcomes (exact ties) and y1 == y0.
SuiteResult run_theorem_suite(std::size_t trials, std::uint64_t seed,
                              const SuiteOptions& options = {});

}  // namespace cpf::equivalence
