#include "cpf/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "cpf/errors.hpp"

namespace cpf {

void check(const TreeParams& params, std::size_t num_features) {
  if (params.min_arm_count < 1) throw ConfigError("tree: k (min_arm_count) must be >= 1");
  if (params.mtry < 1 || params.mtry > num_features) {
    throw ConfigError("tree: m (mtry) must lie in [1, " + std::to_string(num_features) +
                      "], got " + std::to_string(params.mtry));
  }
  if (params.max_depth < 1) throw ConfigError("tree: max_depth must be >= 1");
}

std::optional<double> score_split(const SplitCandidate& c, std::size_t node_split_size,
                                  SplitCriterion criterion) {
  if (!c.split_left.covers_both_arms() || !c.split_right.covers_both_arms()) {
    return std::nullopt;
  }
  const double n = static_cast<double>(node_split_size);
  const double w_left = static_cast<double>(c.split_left.size()) / n;
  const double w_right = static_cast<double>(c.split_right.size()) / n;
  const double tau_left = c.split_left.tau();
  const double tau_right = c.split_right.tau();
  switch (criterion) {
    case SplitCriterion::kPolicy:
      return -(w_left * std::abs(tau_left) + w_right * std::abs(tau_right));
    case SplitCriterion::kPlugin:
      return -(w_left * tau_left * tau_left + w_right * tau_right * tau_right);
  }
  return std::nullopt;
}

std::optional<double> score_split(const SplitCandidate& c,
                                  std::span<const std::size_t> node_split_rows,
                                  SplitCriterion criterion) {
  return score_split(c, node_split_rows.size(), criterion);
}

SplitScorer make_scorer(SplitCriterion criterion) {
  return [criterion](const SplitCandidate& c, std::size_t n) {
    return score_split(c, n, criterion);
  };
}

double leaf_tau(const Dataset& ds, std::span<const std::size_t> rows) {
  ArmStats s;
  for (std::size_t i : rows) s.add(ds.treated(i), ds.outcome(i));
  if (!s.covers_both_arms()) {
    throw TrainingError("leaf has " + std::to_string(s.n_treated) + " treated and " +
                        std::to_string(s.n_control) + " control rows; both arms are required");
  }
  return s.tau();
}

std::vector<SplitCandidate> candidate_splits(const Dataset& ds,
                                             std::span<const std::size_t> split_rows,
                                             std::span<const std::size_t> features,
                                             std::span<const std::size_t> est_rows) {
  ArmStats total;
  for (std::size_t i : split_rows) total.add(ds.treated(i), ds.outcome(i));
  const ArmCounts est_total = count_arms(ds, est_rows);

  std::vector<SplitCandidate> out;
  std::vector<std::pair<double, std::size_t>> sorted_split(split_rows.size());
  std::vector<std::pair<double, bool>> sorted_est(est_rows.size());

  for (std::size_t f : features) {
    for (std::size_t r = 0; r < split_rows.size(); ++r) {
      sorted_split[r] = {ds.covariate(split_rows[r], f), split_rows[r]};
    }
    std::sort(sorted_split.begin(), sorted_split.end());
    for (std::size_t r = 0; r < est_rows.size(); ++r) {
      sorted_est[r] = {ds.covariate(est_rows[r], f), ds.treated(est_rows[r])};
    }
    std::sort(sorted_est.begin(), sorted_est.end());

    ArmStats left;
    ArmCounts est_left;
    std::size_t e = 0;
    for (std::size_t r = 0; r + 1 < sorted_split.size(); ++r) {
      const std::size_t row = sorted_split[r].second;
      left.add(ds.treated(row), ds.outcome(row));
      const double lo = sorted_split[r].first;
      const double hi = sorted_split[r + 1].first;
      if (!(lo < hi)) continue;

      double threshold = std::midpoint(lo, hi);
      if (!(threshold < hi)) threshold = lo;
      while (e < sorted_est.size() && sorted_est[e].first <= threshold) {
        if (sorted_est[e].second) {
          ++est_left.treated;
        } else {
          ++est_left.control;
        }
        ++e;
      }

      SplitCandidate c;
      c.feature = f;
      c.threshold = threshold;
      c.split_left = left;
      c.split_right.n_treated = total.n_treated - left.n_treated;
      c.split_right.n_control = total.n_control - left.n_control;
      c.split_right.sum_treated = total.sum_treated - left.sum_treated;
      c.split_right.sum_control = total.sum_control - left.sum_control;
      c.est_left = est_left;
      c.est_right = {est_total.treated - est_left.treated, est_total.control - est_left.control};
      out.push_back(c);
    }
  }
  return out;
}

bool satisfies_leaf_constraint(const SplitCandidate& c, std::size_t min_arm_count) noexcept {
  return c.est_left.treated >= min_arm_count && c.est_left.control >= min_arm_count &&
         c.est_right.treated >= min_arm_count && c.est_right.control >= min_arm_count;
}

bool tie_break_before(const SplitCandidate& a, const SplitCandidate& b) noexcept {
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.threshold < b.threshold;
}

namespace {

struct Evaluation {
  std::vector<SplitCandidate> candidates;
  std::vector<std::optional<double>> scores;
  std::optional<std::size_t> best;
};

Evaluation evaluate_node(const Dataset& ds, std::span<const std::size_t> split_rows,
                         std::span<const std::size_t> est_rows,
                         std::span<const std::size_t> features, std::size_t min_arm_count,
                         const SplitScorer& scorer) {
  Evaluation ev;
  ev.candidates = candidate_splits(ds, split_rows, features, est_rows);
  ev.scores.reserve(ev.candidates.size());
  for (std::size_t c = 0; c < ev.candidates.size(); ++c) {
    const SplitCandidate& cand = ev.candidates[c];
    std::optional<double> s;
    if (satisfies_leaf_constraint(cand, min_arm_count)) s = scorer(cand, split_rows.size());
    ev.scores.push_back(s);
    if (!s) continue;
    if (!ev.best) {
      ev.best = c;
      continue;
    }
    const double best_score = *ev.scores[*ev.best];
    if (*s < best_score ||
        (*s == best_score && tie_break_before(cand, ev.candidates[*ev.best]))) {
      ev.best = c;
    }
  }
  return ev;
}

class Grower {
 public:
  Grower(const Dataset& ds, const TreeParams& params, Rng& rng, const SplitScorer& scorer,
         const SplitObserver& observer)
      : ds_(ds), params_(params), rng_(rng), scorer_(scorer), observer_(observer),
        feature_pool_(ds.num_features()) {
    std::iota(feature_pool_.begin(), feature_pool_.end(), std::size_t{0});
  }

  std::size_t build(const std::vector<std::size_t>& split_rows,
                    const std::vector<std::size_t>& est_rows, std::size_t depth) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();

    if (depth < params_.max_depth) {
      const auto features = sample_features();
      Evaluation ev =
          evaluate_node(ds_, split_rows, est_rows, features, params_.min_arm_count, scorer_);
      if (ev.best) {
        const SplitCandidate chosen = ev.candidates[*ev.best];
        if (observer_) {
          SplitDecision d;
          d.depth = depth;
          d.features = features;
          d.chosen = {chosen, *ev.scores[*ev.best]};
          d.candidates = std::move(ev.candidates);
          d.scores = std::move(ev.scores);
          observer_(d);
        }
        auto [split_left, split_right] = partition(split_rows, chosen);
        auto [est_left, est_right] = partition(est_rows, chosen);
        const std::size_t left = build(split_left, est_left, depth + 1);
        const std::size_t right = build(split_right, est_right, depth + 1);
        Node& node = nodes_[id];
        node.feature = static_cast<std::int32_t>(chosen.feature);
        node.threshold = chosen.threshold;
        node.left = static_cast<std::uint32_t>(left);
        node.right = static_cast<std::uint32_t>(right);
        return id;
      }
    }

    Node& leaf = nodes_[id];
    fill_leaf(leaf, ds_, est_rows);
    return id;
  }

  std::vector<Node> release() { return std::move(nodes_); }

  static void fill_leaf(Node& leaf, const Dataset& ds, std::span<const std::size_t> est_rows) {
    const ArmCounts counts = count_arms(ds, est_rows);
    leaf.feature = Node::kLeaf;
    leaf.tau_hat = leaf_tau(ds, est_rows);
    leaf.g = leaf_sign(leaf.tau_hat);
    leaf.n_treated = static_cast<std::uint32_t>(counts.treated);
    leaf.n_control = static_cast<std::uint32_t>(counts.control);
  }

 private:
  std::vector<std::size_t> sample_features() {
    const std::size_t p = feature_pool_.size();
    for (std::size_t i = 0; i < params_.mtry; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.uniform_index(p - i));
      std::swap(feature_pool_[i], feature_pool_[j]);
    }
    return {feature_pool_.begin(), feature_pool_.begin() + static_cast<long>(params_.mtry)};
  }

  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition(
      const std::vector<std::size_t>& rows, const SplitCandidate& c) const {
    std::vector<std::size_t> left, right;
    for (std::size_t i : rows) {
      (ds_.covariate(i, c.feature) <= c.threshold ? left : right).push_back(i);
    }
    return {std::move(left), std::move(right)};
  }

  const Dataset& ds_;
  const TreeParams& params_;
  Rng& rng_;
  const SplitScorer& scorer_;
  const SplitObserver& observer_;
  std::vector<std::size_t> feature_pool_;
  std::vector<Node> nodes_;
};

}  // namespace

std::optional<ScoredSplit> find_best_split(const Dataset& ds,
                                           std::span<const std::size_t> split_rows,
                                           std::span<const std::size_t> est_rows,
                                           std::span<const std::size_t> features,
                                           std::size_t min_arm_count, const SplitScorer& scorer) {
  const Evaluation ev = evaluate_node(ds, split_rows, est_rows, features, min_arm_count, scorer);
  if (!ev.best) return std::nullopt;
  return ScoredSplit{ev.candidates[*ev.best], *ev.scores[*ev.best]};
}

Tree::Tree(std::vector<Node> nodes, std::size_t num_features)
    : nodes_(std::move(nodes)), num_features_(num_features) {}

std::size_t Tree::leaf_index(std::span<const double> x) const noexcept {
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const Node& n = nodes_[id];
    id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return id;
}

LeafPrediction Tree::predict(std::span<const double> x) const {
  if (x.size() != num_features_) {
    throw InputError("covariate vector has " + std::to_string(x.size()) +
                     " entries, tree expects " + std::to_string(num_features_));
  }
  const Node& leaf = nodes_[leaf_index(x)];
  return {leaf.tau_hat, leaf.g};
}

std::size_t Tree::num_leaves() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::size_t Tree::depth() const noexcept {
  if (nodes_.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes_[id].is_leaf()) {
      stack.emplace_back(nodes_[id].left, d + 1);
      stack.emplace_back(nodes_[id].right, d + 1);
    }
  }
  return deepest;
}

std::vector<std::size_t> Tree::leaf_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf()) out.push_back(i);
  }
  return out;
}

Tree grow(const Dataset& ds, std::span<const std::size_t> split_rows,
          std::span<const std::size_t> est_rows, const TreeParams& params, Rng& rng,
          const SplitScorer& scorer, const SplitObserver& observer) {
  check(params, ds.num_features());
  const ArmCounts est = count_arms(ds, est_rows);
  if (est.treated < params.min_arm_count || est.control < params.min_arm_count) {
    throw TrainingError("estimation sample has " + std::to_string(est.treated) + " treated and " +
                        std::to_string(est.control) + " control rows; k = " +
                        std::to_string(params.min_arm_count) + " of each arm is required");
  }
  const ArmCounts split = count_arms(ds, split_rows);
  if (split.treated == 0 || split.control == 0) {
    throw TrainingError("split sample has " + std::to_string(split.treated) + " treated and " +
                        std::to_string(split.control) + " control rows; both arms are required");
  }

  Grower grower(ds, params, rng, scorer, observer);
  grower.build({split_rows.begin(), split_rows.end()}, {est_rows.begin(), est_rows.end()}, 0);
  return Tree(grower.release(), ds.num_features());
}

std::vector<std::vector<std::size_t>> leaf_members(const Tree& tree, const Dataset& ds,
                                                   std::span<const std::size_t> rows) {
  std::vector<std::vector<std::size_t>> members(tree.nodes().size());
  for (std::size_t i : rows) members[tree.leaf_index(ds.row(i))].push_back(i);
  return members;
}

void estimate_leaves(Tree& tree, const Dataset& ds, std::span<const std::size_t> est_rows) {
  const auto members = leaf_members(tree, ds, est_rows);
  auto& nodes = tree.mutable_nodes();
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    if (nodes[id].is_leaf()) Grower::fill_leaf(nodes[id], ds, members[id]);
  }
}

std::vector<double> riesz_weights(const Tree& tree, std::size_t leaf, const Dataset& ds,
                                  std::span<const std::size_t> est_rows) {
  const double n = static_cast<double>(est_rows.size());
  std::vector<bool> inside(est_rows.size());
  double treated_share = 0.0;
  double control_share = 0.0;
  for (std::size_t r = 0; r < est_rows.size(); ++r) {
    inside[r] = tree.leaf_index(ds.row(est_rows[r])) == leaf;
    if (!inside[r]) continue;
    (ds.treated(est_rows[r]) ? treated_share : control_share) += 1.0 / n;
  }
  std::vector<double> alpha(est_rows.size(), 0.0);
  for (std::size_t r = 0; r < est_rows.size(); ++r) {
    if (!inside[r]) continue;
    alpha[r] = ds.treated(est_rows[r]) ? 1.0 / treated_share : -1.0 / control_share;
  }
  return alpha;
}

}  // namespace cpf
