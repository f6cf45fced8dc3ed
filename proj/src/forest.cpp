#include "cpf/forest.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "cpf/csv.hpp"
#include "cpf/errors.hpp"

namespace cpf {

std::string_view to_string(ForestMethod m) {
  return m == ForestMethod::kPolicy ? "policy" : "plugin";
}

std::string_view to_string(Aggregation a) {
  return a == Aggregation::kVote ? "vote" : "tau_mean";
}

ForestMethod parse_method(std::string_view s) {
  if (s == "policy") return ForestMethod::kPolicy;
  if (s == "plugin") return ForestMethod::kPlugin;
  throw ConfigError("unknown forest method '" + std::string(s) + "' (expected policy|plugin)");
}

Aggregation parse_aggregation(std::string_view s) {
  if (s == "vote") return Aggregation::kVote;
  if (s == "tau_mean") return Aggregation::kTauMean;
  throw ConfigError("unknown aggregate '" + std::string(s) + "' (expected vote|tau_mean)");
}

Aggregation default_aggregation(ForestMethod m) {
  return m == ForestMethod::kPolicy ? Aggregation::kVote : Aggregation::kTauMean;
}

void check(const ForestParams& params, std::size_t n, std::size_t p) {
  if (params.num_trees < 1) throw ConfigError("forest: B (num_trees) must be >= 1");
  if (params.subsample < 2 || params.subsample > n) {
    throw ConfigError("forest: s (subsample) must lie in [2, " + std::to_string(n) + "], got " +
                      std::to_string(params.subsample));
  }
  check(params.tree, p);
}

std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index) {
  return mix64(forest_seed ^ mix64(static_cast<std::uint64_t>(tree_index) + 0x632be59bd9b4e019ULL));
}

TreeSample draw_tree_sample(const Dataset& ds, const ForestParams& params, std::size_t tree_index,
                            Rng& rng) {
  const std::size_t n = ds.num_rows();
  const std::size_t s = params.subsample;
  const std::size_t n_est = (s + 1) / 2;
  const std::size_t k = params.tree.min_arm_count;
  std::vector<std::size_t> pool(n);

  TreeSample sample;
  for (sample.attempts = 1; sample.attempts <= kMaxSampleAttempts; ++sample.attempts) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates: the first s slots are a uniform draw without
    // replacement, in uniformly random order.
    for (std::size_t i = 0; i < s; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
      std::swap(pool[i], pool[j]);
    }
    sample.est.assign(pool.begin(), pool.begin() + static_cast<long>(n_est));
    sample.split.assign(pool.begin() + static_cast<long>(n_est),
                        pool.begin() + static_cast<long>(s));
    const ArmCounts est = count_arms(ds, sample.est);
    const ArmCounts split = count_arms(ds, sample.split);
    if (est.treated >= k && est.control >= k && split.treated > 0 && split.control > 0) {
      std::sort(sample.est.begin(), sample.est.end());
      std::sort(sample.split.begin(), sample.split.end());
      return sample;
    }
  }
  throw TrainingError("tree " + std::to_string(tree_index) + ": no subsample with k = " +
                      std::to_string(k) + " treated and control estimation rows after " +
                      std::to_string(kMaxSampleAttempts) + " draws");
}

Forest::Forest(ForestMethod method, ForestParams params, std::size_t num_features,
               std::vector<Tree> trees, std::vector<std::uint64_t> tree_seeds)
    : method_(method),
      params_(params),
      num_features_(num_features),
      trees_(std::move(trees)),
      tree_seeds_(std::move(tree_seeds)) {}

void Forest::check_dimension(std::span<const double> x) const {
  if (x.size() != num_features_) {
    throw InputError("covariate vector has " + std::to_string(x.size()) +
                     " entries, forest expects " + std::to_string(num_features_));
  }
}

double Forest::predict_vote(std::span<const double> x) const {
  check_dimension(x);
  long votes = 0;
  for (const Tree& t : trees_) votes += t.nodes()[t.leaf_index(x)].g;
  return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

double Forest::predict_tau_mean(std::span<const double> x) const {
  check_dimension(x);
  double sum = 0.0;
  for (const Tree& t : trees_) sum += t.nodes()[t.leaf_index(x)].tau_hat;
  return sum / static_cast<double>(trees_.size());
}

double Forest::predict_score(std::span<const double> x, Aggregation agg) const {
  return agg == Aggregation::kVote ? predict_vote(x) : predict_tau_mean(x);
}

std::uint8_t Forest::predict_policy(std::span<const double> x, Aggregation agg) const {
  return predict_score(x, agg) >= 0.0 ? 1 : 0;
}

namespace {

void check_coverage(const Dataset& ds, const ForestParams& params) {
  const ArmCounts arms = count_arms(ds, IndexSet::all(ds.num_rows()).view());
  const std::size_t need = 2 * params.tree.min_arm_count;
  if (arms.treated < need || arms.control < need) {
    throw TrainingError("dataset has " + std::to_string(arms.treated) + " treated and " +
                        std::to_string(arms.control) + " control rows; 2k = " +
                        std::to_string(need) + " of each arm are required");
  }
}

SplitScorer scorer_for(const TrainOptions& options) {
  if (options.scorer_override) return options.scorer_override;
  return make_scorer(options.method == ForestMethod::kPolicy ? SplitCriterion::kPolicy
                                                             : SplitCriterion::kPlugin);
}

Tree train_one(const Dataset& ds, const ForestParams& params, const SplitScorer& scorer,
               std::size_t b) {
  Rng rng(tree_seed(params.seed, b));
  const TreeSample sample = draw_tree_sample(ds, params, b, rng);
  return grow(ds, sample.split, sample.est, params.tree, rng, scorer);
}

std::vector<std::uint64_t> all_tree_seeds(const ForestParams& params) {
  std::vector<std::uint64_t> seeds(params.num_trees);
  for (std::size_t b = 0; b < seeds.size(); ++b) seeds[b] = tree_seed(params.seed, b);
  return seeds;
}

}  // namespace

Forest train(const Dataset& ds, const ForestParams& params, const TrainOptions& options) {
  validate(ds);
  check(params, ds.num_rows(), ds.num_features());
  check_coverage(ds, params);
  const SplitScorer scorer = scorer_for(options);
  const long num_trees = static_cast<long>(params.num_trees);
  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();

  std::vector<Tree> trees(params.num_trees);
  std::vector<std::exception_ptr> errors(params.num_trees);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long b = 0; b < num_trees; ++b) {
    try {
      trees[b] = train_one(ds, params, scorer, static_cast<std::size_t>(b));
    } catch (...) {
      errors[b] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return Forest(options.method, params, ds.num_features(), std::move(trees),
                all_tree_seeds(params));
}

Forest train_serial(const Dataset& ds, const ForestParams& params, const TrainOptions& options) {
  validate(ds);
  check(params, ds.num_rows(), ds.num_features());
  check_coverage(ds, params);
  const SplitScorer scorer = scorer_for(options);
  std::vector<Tree> trees;
  trees.reserve(params.num_trees);
  for (std::size_t b = 0; b < params.num_trees; ++b) {
    trees.push_back(train_one(ds, params, scorer, b));
  }
  return Forest(options.method, params, ds.num_features(), std::move(trees),
                all_tree_seeds(params));
}

namespace {

std::size_t batch_rows(const Forest& forest, std::span<const double> covariates) {
  const std::size_t p = forest.num_features();
  if (p == 0 || covariates.size() % p != 0) {
    throw InputError("covariate buffer of " + std::to_string(covariates.size()) +
                     " values is not a multiple of p = " + std::to_string(p));
  }
  return covariates.size() / p;
}

}  // namespace

BatchPrediction predict_batch(const Forest& forest, std::span<const double> covariates,
                              Aggregation agg, int threads) {
  const std::size_t n = batch_rows(forest, covariates);
  const std::size_t p = forest.num_features();
  const int nthreads = threads > 0 ? threads : omp_get_max_threads();
  BatchPrediction out;
  out.scores.resize(n);
  out.actions.resize(n);
  const long rows = static_cast<long>(n);
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (long i = 0; i < rows; ++i) {
    const auto x = covariates.subspan(static_cast<std::size_t>(i) * p, p);
    out.scores[i] = forest.predict_score(x, agg);
    out.actions[i] = out.scores[i] >= 0.0 ? 1 : 0;
  }
  return out;
}

BatchPrediction predict_batch_serial(const Forest& forest, std::span<const double> covariates,
                                     Aggregation agg) {
  const std::size_t n = batch_rows(forest, covariates);
  const std::size_t p = forest.num_features();
  BatchPrediction out;
  out.scores.reserve(n);
  out.actions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.scores.push_back(forest.predict_score(covariates.subspan(i * p, p), agg));
    out.actions.push_back(forest.predict_policy(covariates.subspan(i * p, p), agg));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "causal-policy-forest";
constexpr int kFormatVersion = 1;

class Reader {
 public:
  explicit Reader(std::string_view text) : in_(std::string(text)) {}

  std::string word(std::string_view what) {
    std::string w;
    if (!(in_ >> w)) throw ModelFormatError("unexpected end of model file reading " + std::string(what));
    return w;
  }

  void expect(std::string_view keyword) {
    const std::string w = word(keyword);
    if (w != keyword) {
      throw ModelFormatError("expected '" + std::string(keyword) + "', found '" + w + "'");
    }
  }

  template <class Int>
  Int integer(std::string_view what) {
    const std::string w = word(what);
    Int v{};
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc{} || ptr != w.data() + w.size()) {
      throw ModelFormatError("bad integer for " + std::string(what) + ": '" + w + "'");
    }
    return v;
  }

  template <class Int>
  Int keyed_integer(std::string_view key) {
    expect(key);
    return integer<Int>(key);
  }

  double real(std::string_view what) {
    const std::string w = word(what);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc{} || ptr != w.data() + w.size()) {
      throw ModelFormatError("bad number for " + std::string(what) + ": '" + w + "'");
    }
    return v;
  }

  bool at_end() {
    std::string w;
    return !(in_ >> w);
  }

 private:
  std::istringstream in_;
};

void check_tree_structure(const std::vector<Node>& nodes, std::size_t p, std::size_t b) {
  const auto fail = [b](const std::string& what) {
    throw ModelFormatError("tree " + std::to_string(b) + ": " + what);
  };
  if (nodes.empty()) fail("no nodes");
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    const Node& n = nodes[id];
    if (n.is_leaf()) {
      if (n.g != leaf_sign(n.tau_hat)) fail("leaf sign inconsistent with tau_hat");
      continue;
    }
    if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= p) fail("feature out of range");
    // Children are always stored after their parent, which rules out cycles.
    if (n.left <= id || n.right <= id || n.left >= nodes.size() || n.right >= nodes.size()) {
      fail("child index out of range");
    }
  }
}

}  // namespace

std::string serialize(const Forest& forest) {
  const ForestParams& p = forest.params();
  std::ostringstream out;
  out << kMagic << " v" << kFormatVersion << '\n'
      << "method " << to_string(forest.method()) << '\n'
      << "num_features " << forest.num_features() << '\n'
      << "num_trees " << p.num_trees << '\n'
      << "subsample " << p.subsample << '\n'
      << "min_arm_count " << p.tree.min_arm_count << '\n'
      << "mtry " << p.tree.mtry << '\n'
      << "max_depth " << p.tree.max_depth << '\n'
      << "seed " << p.seed << '\n';
  for (std::size_t b = 0; b < forest.trees().size(); ++b) {
    const auto& nodes = forest.trees()[b].nodes();
    out << "tree " << b << " seed " << forest.tree_seeds()[b] << " nodes " << nodes.size() << '\n';
    for (const Node& n : nodes) {
      if (n.is_leaf()) {
        out << "L " << format_double(n.tau_hat) << ' ' << static_cast<int>(n.g) << ' '
            << n.n_treated << ' ' << n.n_control << '\n';
      } else {
        out << "I " << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' '
            << n.right << '\n';
      }
    }
  }
  out << "end\n";
  return out.str();
}

Forest deserialize(std::string_view text) {
  Reader in(text);
  const std::string magic = in.word("header");
  if (magic != kMagic) throw ModelFormatError("not a causal-policy-forest model file");
  const std::string version = in.word("version");
  if (version != "v" + std::to_string(kFormatVersion)) {
    throw ModelFormatError("unsupported model format version '" + version + "' (expected v" +
                           std::to_string(kFormatVersion) + ")");
  }
  in.expect("method");
  ForestMethod method;
  try {
    method = parse_method(in.word("method"));
  } catch (const ConfigError& e) {
    throw ModelFormatError(e.what());
  }
  const auto p = in.keyed_integer<std::size_t>("num_features");
  ForestParams params;
  params.num_trees = in.keyed_integer<std::size_t>("num_trees");
  params.subsample = in.keyed_integer<std::size_t>("subsample");
  params.tree.min_arm_count = in.keyed_integer<std::size_t>("min_arm_count");
  params.tree.mtry = in.keyed_integer<std::size_t>("mtry");
  params.tree.max_depth = in.keyed_integer<std::size_t>("max_depth");
  params.seed = in.keyed_integer<std::uint64_t>("seed");
  if (p == 0 || params.num_trees == 0) throw ModelFormatError("empty forest");

  std::vector<Tree> trees;
  std::vector<std::uint64_t> seeds;
  for (std::size_t b = 0; b < params.num_trees; ++b) {
    in.expect("tree");
    if (in.integer<std::size_t>("tree index") != b) throw ModelFormatError("trees out of order");
    seeds.push_back(in.keyed_integer<std::uint64_t>("seed"));
    const auto count = in.keyed_integer<std::size_t>("nodes");
    if (count > std::numeric_limits<std::uint32_t>::max()) throw ModelFormatError("node count too large");
    std::vector<Node> nodes(count);
    for (Node& n : nodes) {
      const std::string tag = in.word("node");
      if (tag == "L") {
        n.feature = Node::kLeaf;
        n.tau_hat = in.real("tau_hat");
        const int g = in.integer<int>("g");
        if (g != 1 && g != -1) throw ModelFormatError("leaf g must be 1 or -1");
        n.g = static_cast<std::int8_t>(g);
        n.n_treated = in.integer<std::uint32_t>("n_treated");
        n.n_control = in.integer<std::uint32_t>("n_control");
      } else if (tag == "I") {
        n.feature = in.integer<std::int32_t>("feature");
        n.threshold = in.real("threshold");
        n.left = in.integer<std::uint32_t>("left");
        n.right = in.integer<std::uint32_t>("right");
      } else {
        throw ModelFormatError("unknown node tag '" + tag + "'");
      }
    }
    check_tree_structure(nodes, p, b);
    trees.emplace_back(std::move(nodes), p);
  }
  in.expect("end");
  if (!in.at_end()) throw ModelFormatError("trailing content after 'end'");
  return Forest(method, params, p, std::move(trees), std::move(seeds));
}

void save(const Forest& forest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file '" + path.string() + "'");
  out << serialize(forest);
  if (!out) throw std::runtime_error("write failed for model file '" + path.string() + "'");
}

Forest load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

ForestSummary summarize(const Forest& forest) {
  ForestSummary s;
  s.num_trees = forest.trees().size();
  if (s.num_trees == 0) return s;
  s.min_depth = s.min_leaves = s.min_leaf_treated = s.min_leaf_control =
      std::numeric_limits<std::size_t>::max();
  double depth_sum = 0.0;
  double leaf_sum = 0.0;
  for (const Tree& t : forest.trees()) {
    const std::size_t d = t.depth();
    const std::size_t l = t.num_leaves();
    s.min_depth = std::min(s.min_depth, d);
    s.max_depth = std::max(s.max_depth, d);
    s.min_leaves = std::min(s.min_leaves, l);
    s.max_leaves = std::max(s.max_leaves, l);
    depth_sum += static_cast<double>(d);
    leaf_sum += static_cast<double>(l);
    for (const Node& n : t.nodes()) {
      if (!n.is_leaf()) continue;
      s.min_leaf_treated = std::min<std::size_t>(s.min_leaf_treated, n.n_treated);
      s.min_leaf_control = std::min<std::size_t>(s.min_leaf_control, n.n_control);
    }
  }
  s.mean_depth = depth_sum / static_cast<double>(s.num_trees);
  s.mean_leaves = leaf_sum / static_cast<double>(s.num_trees);
  return s;
}

}  // namespace cpf
