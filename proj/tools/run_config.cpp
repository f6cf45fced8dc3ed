#include "run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <map>
#include <set>
#include <sstream>

#include "cpf/errors.hpp"

namespace cpf::cli {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"dgp", {"n", "p", "epsilon", "noise_sd", "seed"}},
      {"forest", {"num_trees", "subsample", "min_arm_count", "mtry", "max_depth", "seed",
                  "aggregate"}},
      {"baseline", {"plugin"}},
      {"eval", {"n", "seed"}},
      {"data", {"outcome", "treatment", "covariates"}},
      {"run", {"out", "threads"}},
  };
  return keys;
}

template <class T>
void read(const pt::ptree& tree, const std::string& key, T& target) {
  const auto node = tree.get_child_optional(key);
  if (!node) return;
  const auto value = node->get_value_optional<T>();
  if (!value) {
    throw ConfigError("config: bad value for '" + key + "': '" + node->data() + "'");
  }
  target = *value;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ConfigError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
      }
    }
  }

  RunConfig cfg;
  read(tree, "dgp.n", cfg.dgp.n);
  read(tree, "dgp.p", cfg.dgp.p);
  read(tree, "dgp.epsilon", cfg.dgp.epsilon);
  read(tree, "dgp.noise_sd", cfg.dgp.noise_sd);
  read(tree, "dgp.seed", cfg.dgp.seed);
  read(tree, "forest.num_trees", cfg.forest.num_trees);
  read(tree, "forest.subsample", cfg.forest.subsample);
  read(tree, "forest.min_arm_count", cfg.forest.tree.min_arm_count);
  read(tree, "forest.mtry", cfg.forest.tree.mtry);
  read(tree, "forest.max_depth", cfg.forest.tree.max_depth);
  read(tree, "forest.seed", cfg.forest.seed);
  std::string aggregate(to_string(cfg.aggregate));
  read(tree, "forest.aggregate", aggregate);
  cfg.aggregate = parse_aggregation(aggregate);
  read(tree, "baseline.plugin", cfg.plugin_baseline);
  read(tree, "eval.n", cfg.eval_n);
  read(tree, "eval.seed", cfg.eval_seed);
  read(tree, "data.outcome", cfg.schema.outcome);
  read(tree, "data.treatment", cfg.schema.treatment);
  std::string covariates;
  read(tree, "data.covariates", covariates);
  cfg.schema.covariates = split_names(covariates);
  std::string out = cfg.out.string();
  read(tree, "run.out", out);
  cfg.out = out;
  read(tree, "run.threads", cfg.threads);
  check(cfg);
  return cfg;
}

void check(const RunConfig& cfg) {
  synth::check(cfg.dgp);
  if (cfg.forest.num_trees < 1) throw ConfigError("forest: num_trees must be >= 1");
  if (cfg.forest.subsample < 2) throw ConfigError("forest: subsample must be >= 2");
  if (cfg.forest.tree.min_arm_count < 1) throw ConfigError("forest: min_arm_count must be >= 1");
  if (cfg.forest.tree.mtry < 1) throw ConfigError("forest: mtry must be >= 1");
  if (cfg.forest.tree.max_depth < 1) throw ConfigError("forest: max_depth must be >= 1");
  if (cfg.threads < 0) throw ConfigError("run: threads must be >= 0");
}

}  // namespace cpf::cli
