#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpf/dataset.hpp"
#include "cpf/tree.hpp"

namespace cpf {

/// Which split score the trees were grown with. Policy forests are the
/// restricted {-1,1} criterion; plug-in forests use the squared-spread
/// causal-tree criterion and are thresholded downstream.
enum class ForestMethod : std::uint8_t { kPolicy, kPlugin };

/// How per-tree leaf outputs are combined into one policy.
enum class Aggregation : std::uint8_t {
  kVote,     ///< mean of per-tree signs g_b, treat iff >= 0
  kTauMean,  ///< mean of per-tree tau_b, treat iff >= 0
};

std::string_view to_string(ForestMethod m);
std::string_view to_string(Aggregation a);
ForestMethod parse_method(std::string_view s);
Aggregation parse_aggregation(std::string_view s);
/// Vote for policy forests, tau_mean for plug-in forests.
Aggregation default_aggregation(ForestMethod m);

struct ForestParams {
  std::size_t num_trees = 200;
  std::size_t subsample = 2000;
  TreeParams tree;
  std::uint64_t seed = 7;

  bool operator==(const ForestParams&) const = default;
};

/// Throws ConfigError unless num_trees >= 1, 2 <= subsample <= n, and the
/// tree parameters are valid for p.
void check(const ForestParams& params, std::size_t n, std::size_t p);

/// Subsample draws per tree before training gives up.
inline constexpr std::size_t kMaxSampleAttempts = 100;

/// Seed of tree b's private RNG stream.
std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index);

/// One tree's honest subsample: `est` has ceil(s/2) rows, `split` floor(s/2),
/// disjoint, both sorted ascending.
struct TreeSample {
  std::vector<std::size_t> est;
  std::vector<std::size_t> split;
  std::size_t attempts = 0;
};

/// Draws s rows without replacement and halves them, redrawing while the
/// estimation half lacks k of an arm or the split half lacks an arm.
/// Throws TrainingError after kMaxSampleAttempts failed draws.
TreeSample draw_tree_sample(const Dataset& ds, const ForestParams& params, std::size_t tree_index,
                            Rng& rng);

class Forest {
 public:
  Forest() = default;
  Forest(ForestMethod method, ForestParams params, std::size_t num_features,
         std::vector<Tree> trees, std::vector<std::uint64_t> tree_seeds);

  ForestMethod method() const noexcept { return method_; }
  const ForestParams& params() const noexcept { return params_; }
  std::size_t num_features() const noexcept { return num_features_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }
  const std::vector<std::uint64_t>& tree_seeds() const noexcept { return tree_seeds_; }

  /// (1/B) sum_b g_b(x), in [-1, 1].
  double predict_vote(std::span<const double> x) const;
  /// (1/B) sum_b tau_b(x).
  double predict_tau_mean(std::span<const double> x) const;
  double predict_score(std::span<const double> x, Aggregation agg) const;
  /// 1 iff the aggregated score is >= 0.
  std::uint8_t predict_policy(std::span<const double> x, Aggregation agg) const;
  std::uint8_t predict_policy(std::span<const double> x) const {
    return predict_policy(x, default_aggregation(method_));
  }

  bool operator==(const Forest&) const = default;

 private:
  void check_dimension(std::span<const double> x) const;

  ForestMethod method_ = ForestMethod::kPolicy;
  ForestParams params_;
  std::size_t num_features_ = 0;
  std::vector<Tree> trees_;
  std::vector<std::uint64_t> tree_seeds_;
};

struct TrainOptions {
  ForestMethod method = ForestMethod::kPolicy;
  /// OpenMP threads for train(); 0 means the OpenMP default.
  int threads = 0;
  /// Replaces the method's split score when set (tests only).
  SplitScorer scorer_override;
};

/// Trains B honest trees in parallel. Tree b depends only on (seed, b, ds),
/// so the result is identical for any thread count and equals train_serial.
Forest train(const Dataset& ds, const ForestParams& params, const TrainOptions& options = {});
/// Single-threaded reference implementation of train().
Forest train_serial(const Dataset& ds, const ForestParams& params,
                    const TrainOptions& options = {});

struct BatchPrediction {
  std::vector<double> scores;
  std::vector<std::uint8_t> actions;
};

/// Row-major covariates, rows of length forest.num_features().
BatchPrediction predict_batch(const Forest& forest, std::span<const double> covariates,
                              Aggregation agg, int threads = 0);
BatchPrediction predict_batch_serial(const Forest& forest, std::span<const double> covariates,
                                     Aggregation agg);

/// Text model format (see README). Doubles are written in shortest
/// round-trip form, so load(save(f)) == f exactly.
std::string serialize(const Forest& forest);
Forest deserialize(std::string_view text);
void save(const Forest& forest, const std::filesystem::path& path);
Forest load(const std::filesystem::path& path);

struct ForestSummary {
  std::size_t num_trees = 0;
  std::size_t min_depth = 0;
  std::size_t max_depth = 0;
  double mean_depth = 0.0;
  std::size_t min_leaves = 0;
  std::size_t max_leaves = 0;
  double mean_leaves = 0.0;
  std::size_t min_leaf_treated = 0;
  std::size_t min_leaf_control = 0;
};
ForestSummary summarize(const Forest& forest);

}  // namespace cpf
