#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cpf/dataset.hpp"
#include "cpf/rng.hpp"

namespace cpf {

struct TreeParams {
  /// Minimum treated and minimum control count per leaf, on the estimation sample.
  std::size_t min_arm_count = 25;
  /// Candidate split variables drawn per node.
  std::size_t mtry = 3;
  std::size_t max_depth = 8;

  bool operator==(const TreeParams&) const = default;
};

/// Throws ConfigError unless min_arm_count >= 1, 1 <= mtry <= p, max_depth >= 1.
void check(const TreeParams& params, std::size_t num_features);

/// Arm-wise counts and outcome sums over some set of rows.
struct ArmStats {
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  double sum_treated = 0.0;
  double sum_control = 0.0;

  std::size_t size() const noexcept { return n_treated + n_control; }
  bool covers_both_arms() const noexcept { return n_treated > 0 && n_control > 0; }
  /// Difference in arm means; only meaningful when covers_both_arms().
  double tau() const noexcept {
    return sum_treated / static_cast<double>(n_treated) -
           sum_control / static_cast<double>(n_control);
  }
  void add(bool treated, double y) noexcept {
    if (treated) {
      ++n_treated;
      sum_treated += y;
    } else {
      ++n_control;
      sum_control += y;
    }
  }
};

/// Axis-aligned split: rows with x[feature] <= threshold go left.
struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  ArmStats split_left;
  ArmStats split_right;
  ArmCounts est_left;
  ArmCounts est_right;
};

/// Scores a candidate given the node's split-sample size. Lower is better;
/// nullopt marks the candidate invalid (a child lacks an arm on the split
/// sample, so its CATE estimate is undefined).
using SplitScorer = std::function<std::optional<double>(const SplitCandidate&, std::size_t)>;

enum class SplitCriterion : std::uint8_t {
  /// -sum_c (n_c / n) |tau_c|: restricted {-1,1} squared error.
  kPolicy,
  /// -sum_c (n_c / n) tau_c^2: unrestricted squared-error (causal tree) analogue.
  kPlugin,
};

std::optional<double> score_split(const SplitCandidate& c, std::size_t node_split_size,
                                  SplitCriterion criterion = SplitCriterion::kPolicy);
std::optional<double> score_split(const SplitCandidate& c,
                                  std::span<const std::size_t> node_split_rows,
                                  SplitCriterion criterion = SplitCriterion::kPolicy);
SplitScorer make_scorer(SplitCriterion criterion);

/// mean(Y | D=1) - mean(Y | D=0) over `rows`. Throws TrainingError if either
/// arm is empty.
double leaf_tau(const Dataset& ds, std::span<const std::size_t> rows);

/// 1 if tau >= 0, else -1.
constexpr std::int8_t leaf_sign(double tau) noexcept { return tau >= 0.0 ? 1 : -1; }

/// Every midpoint threshold between consecutive distinct values of each
/// feature over `split_rows`, features in the order given. Estimation-sample
/// child counts are filled from `est_rows` (zero when it is empty).
std::vector<SplitCandidate> candidate_splits(const Dataset& ds,
                                             std::span<const std::size_t> split_rows,
                                             std::span<const std::size_t> features,
                                             std::span<const std::size_t> est_rows = {});

/// True when the candidate leaves >= min_arm_count of each arm on the
/// estimation sample in both children.
bool satisfies_leaf_constraint(const SplitCandidate& c, std::size_t min_arm_count) noexcept;

/// Strict order used to pick among equally scored candidates.
bool tie_break_before(const SplitCandidate& a, const SplitCandidate& b) noexcept;

struct ScoredSplit {
  SplitCandidate candidate;
  double score = 0.0;
};

/// Lowest-scoring candidate that is valid under `scorer` and satisfies the
/// estimation-sample leaf constraint; ties go to tie_break_before.
std::optional<ScoredSplit> find_best_split(const Dataset& ds,
                                           std::span<const std::size_t> split_rows,
                                           std::span<const std::size_t> est_rows,
                                           std::span<const std::size_t> features,
                                           std::size_t min_arm_count, const SplitScorer& scorer);

/// Flat node. Internal nodes have feature >= 0 and child indices; leaves
/// carry the honest estimate and estimation-sample arm counts.
struct Node {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double tau_hat = 0.0;
  std::int8_t g = 1;
  std::uint32_t n_treated = 0;
  std::uint32_t n_control = 0;

  bool is_leaf() const noexcept { return feature == kLeaf; }
  bool operator==(const Node&) const = default;
};

struct LeafPrediction {
  double tau_hat = 0.0;
  std::int8_t g = 1;
};

class Tree {
 public:
  Tree() = default;
  Tree(std::vector<Node> nodes, std::size_t num_features);

  /// Throws InputError if x.size() != num_features().
  LeafPrediction predict(std::span<const double> x) const;
  /// Index of the leaf x routes to (no dimension check).
  std::size_t leaf_index(std::span<const double> x) const noexcept;

  std::size_t num_features() const noexcept { return num_features_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::vector<Node>& mutable_nodes() noexcept { return nodes_; }
  std::size_t num_leaves() const noexcept;
  std::size_t depth() const noexcept;
  std::vector<std::size_t> leaf_indices() const;

  bool operator==(const Tree&) const = default;

 private:
  std::vector<Node> nodes_;
  std::size_t num_features_ = 0;
};

/// Everything grow() saw at one internal node; used by tests to audit split
/// choices.
struct SplitDecision {
  std::size_t depth = 0;
  std::vector<std::size_t> features;
  std::vector<SplitCandidate> candidates;
  std::vector<std::optional<double>> scores;
  ScoredSplit chosen;
};
using SplitObserver = std::function<void(const SplitDecision&)>;

/// Grows one honest tree: the partition is chosen on `split_rows` only and
/// leaves are estimated on `est_rows` only. Throws TrainingError when
/// est_rows lacks min_arm_count of an arm or split_rows lacks an arm.
Tree grow(const Dataset& ds, std::span<const std::size_t> split_rows,
          std::span<const std::size_t> est_rows, const TreeParams& params, Rng& rng,
          const SplitScorer& scorer = make_scorer(SplitCriterion::kPolicy),
          const SplitObserver& observer = {});

/// Rows of `rows` grouped by the leaf node index they route to (same order
/// as `rows` within each leaf).
std::vector<std::vector<std::size_t>> leaf_members(const Tree& tree, const Dataset& ds,
                                                   std::span<const std::size_t> rows);

/// Recomputes every leaf's tau_hat, g and arm counts from `est_rows`,
/// keeping the partition fixed.
void estimate_leaves(Tree& tree, const Dataset& ds, std::span<const std::size_t> est_rows);

/// Riesz-representer weights for one leaf S, one per row of `est_rows`:
///   alpha_i = D_i 1[X_i in S] / (N1_S / n') - (1 - D_i) 1[X_i in S] / (N0_S / n'),
/// with n' = |est_rows|, so that (1/n') sum_i alpha_i Y_i is the leaf's
/// difference in means.
std::vector<double> riesz_weights(const Tree& tree, std::size_t leaf, const Dataset& ds,
                                  std::span<const std::size_t> est_rows);

}  // namespace cpf
