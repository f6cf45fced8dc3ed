// cpforest: simulate, train, predict, evaluate, verify-theorem.

#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "cpf/baselines.hpp"
#include "cpf/csv.hpp"
#include "cpf/equivalence.hpp"
#include "cpf/errors.hpp"
#include "cpf/forest.hpp"
#include "cpf/policy_eval.hpp"
#include "cpf/synth.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace cpf;

namespace {

enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kConfigError = 2,
  kDataError = 3,
  kTrainingError = 4,
  kVerificationFailed = 5,
};

constexpr const char* kPolicyModel = "policy.cpf";
constexpr const char* kPluginModel = "plugin.cpf";
const std::vector<std::string> kGroundTruthColumns{"tau0", "e", "y0", "y1"};

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  std::optional<std::string> aggregate;
};

cli::RunConfig resolve(const Overrides& o) {
  cli::RunConfig cfg = o.config.empty() ? cli::RunConfig{} : cli::load_run_config(o.config);
  if (o.threads) cfg.threads = *o.threads;
  if (o.out) cfg.out = *o.out;
  if (o.aggregate) cfg.aggregate = parse_aggregation(*o.aggregate);
  cli::check(cfg);
  return cfg;
}

int thread_count(const cli::RunConfig& cfg) {
  return cfg.threads > 0 ? cfg.threads : omp_get_num_procs();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

void write_synthetic_csv(const fs::path& path, const synth::SyntheticDataset& sd) {
  auto header = default_covariate_names(sd.base.num_features());
  for (const char* c : {"d", "y", "tau0", "e", "y0", "y1"}) header.emplace_back(c);
  std::vector<std::vector<std::string>> rows;
  rows.reserve(sd.base.num_rows());
  for (std::size_t i = 0; i < sd.base.num_rows(); ++i) {
    std::vector<std::string> r;
    r.reserve(header.size());
    for (double v : sd.base.row(i)) r.push_back(format_double(v));
    r.push_back(sd.base.treated(i) ? "1" : "0");
    r.push_back(format_double(sd.base.outcome(i)));
    r.push_back(format_double(sd.tau0[i]));
    r.push_back(format_double(sd.propensity[i]));
    r.push_back(format_double(sd.y0[i]));
    r.push_back(format_double(sd.y1[i]));
    rows.push_back(std::move(r));
  }
  write_csv(path, header, rows);
}

int cmd_simulate(const Overrides& o) {
  cli::RunConfig cfg = resolve(o);
  if (o.seed) cfg.dgp.seed = *o.seed;
  ensure_dir(cfg.out);

  const auto train = synth::generate(cfg.dgp);
  synth::DgpConfig eval_cfg = cfg.dgp;
  eval_cfg.seed = cfg.eval_seed;
  if (cfg.eval_n > 0) eval_cfg.n = cfg.eval_n;
  const auto eval = synth::generate(eval_cfg);

  write_synthetic_csv(cfg.out / "train.csv", train);
  write_synthetic_csv(cfg.out / "eval.csv", eval);
  const double v_train = eval::oracle_policy_value(synth::true_first_best(train), train.tau0);
  const double v_eval = eval::oracle_policy_value(synth::true_first_best(eval), eval.tau0);
  std::printf("wrote %s (%zu rows), %s (%zu rows)\n", (cfg.out / "train.csv").c_str(),
              train.base.num_rows(), (cfg.out / "eval.csv").c_str(), eval.base.num_rows());
  std::printf("oracle policy value: train %.6f, eval %.6f\n", v_train, v_eval);
  return kOk;
}

std::string summary_line(const char* name, const ForestSummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%-8s trees=%zu depth[min/mean/max]=%zu/%.2f/%zu leaves[min/mean/max]=%zu/%.2f/%zu "
                "min leaf arms (treated/control)=%zu/%zu",
                name, s.num_trees, s.min_depth, s.mean_depth, s.max_depth, s.min_leaves,
                s.mean_leaves, s.max_leaves, s.min_leaf_treated, s.min_leaf_control);
  return buf;
}

std::vector<std::string> summary_csv_row(const char* name, const ForestSummary& s) {
  return {name,
          std::to_string(s.num_trees),
          std::to_string(s.min_depth),
          format_double(s.mean_depth),
          std::to_string(s.max_depth),
          std::to_string(s.min_leaves),
          format_double(s.mean_leaves),
          std::to_string(s.max_leaves),
          std::to_string(s.min_leaf_treated),
          std::to_string(s.min_leaf_control)};
}

int cmd_train(const Overrides& o, const std::string& data_path) {
  cli::RunConfig cfg = resolve(o);
  if (o.seed) cfg.forest.seed = *o.seed;
  const Dataset ds = load_csv(data_path, cfg.schema);
  ensure_dir(cfg.out);

  TrainOptions options;
  options.threads = thread_count(cfg);
  const Forest policy = train(ds, cfg.forest, options);
  save(policy, cfg.out / kPolicyModel);
  std::vector<std::vector<std::string>> rows{summary_csv_row("policy", summarize(policy))};
  std::printf("%s\n", summary_line("policy", summarize(policy)).c_str());

  if (cfg.plugin_baseline) {
    const Forest plugin = baselines::train_plugin_forest(ds, cfg.forest, options.threads);
    save(plugin, cfg.out / kPluginModel);
    rows.push_back(summary_csv_row("plugin", summarize(plugin)));
    std::printf("%s\n", summary_line("plugin", summarize(plugin)).c_str());
  }
  write_csv(cfg.out / "train_summary.csv",
            {"method", "trees", "min_depth", "mean_depth", "max_depth", "min_leaves",
             "mean_leaves", "max_leaves", "min_leaf_treated", "min_leaf_control"},
            rows);
  std::printf("models written to %s\n", cfg.out.c_str());
  return kOk;
}

std::vector<std::string> prediction_exclusions(const cli::RunConfig& cfg) {
  std::vector<std::string> exclude = kGroundTruthColumns;
  exclude.push_back(cfg.schema.outcome);
  exclude.push_back(cfg.schema.treatment);
  return exclude;
}

int cmd_predict(const Overrides& o, const std::string& model_path, const std::string& data_path,
                const std::string& out_file) {
  const cli::RunConfig cfg = resolve(o);
  const Forest forest = load(model_path);
  const Aggregation agg = o.aggregate ? cfg.aggregate : default_aggregation(forest.method());
  const CovariateMatrix x =
      load_covariates(data_path, cfg.schema.covariates, prediction_exclusions(cfg));
  if (x.num_features != forest.num_features()) {
    throw DataError("data has " + std::to_string(x.num_features) + " covariate columns, model expects " +
                    std::to_string(forest.num_features()));
  }
  const auto actions = predict_batch(forest, x.values, agg, thread_count(cfg)).actions;
  const auto votes = predict_batch(forest, x.values, Aggregation::kVote, thread_count(cfg)).scores;
  std::vector<std::vector<std::string>> rows;
  rows.reserve(x.num_rows);
  for (std::size_t i = 0; i < x.num_rows; ++i) {
    rows.push_back({actions[i] ? "1" : "0", format_double(votes[i])});
  }
  const fs::path out = out_file.empty() ? cfg.out / "predictions.csv" : fs::path(out_file);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  write_csv(out, {"action", "vote"}, rows);
  std::printf("wrote %zu predictions to %s (aggregate=%s)\n", x.num_rows, out.c_str(),
              std::string(to_string(agg)).c_str());
  return kOk;
}

int cmd_evaluate(const Overrides& o, const std::string& data_path, std::string policy_path,
                 std::string plugin_path, const std::string& model_dir) {
  const cli::RunConfig cfg = resolve(o);
  if (!model_dir.empty()) {
    if (policy_path.empty()) policy_path = (fs::path(model_dir) / kPolicyModel).string();
    if (plugin_path.empty() && fs::exists(fs::path(model_dir) / kPluginModel)) {
      plugin_path = (fs::path(model_dir) / kPluginModel).string();
    }
  }
  if (policy_path.empty()) throw ConfigError("evaluate: no policy model given");

  const CsvTable table = CsvTable::read(data_path);
  if (!table.has_column("tau0")) {
    throw DataError("evaluate: '" + data_path + "' has no tau0 column; oracle metrics need ground truth");
  }
  const Dataset ds = dataset_from_table(table, cfg.schema);
  const std::vector<double> tau0 = table.numeric_column("tau0");
  std::vector<double> propensity;
  if (table.has_column("e")) propensity = table.numeric_column("e");

  const int threads = thread_count(cfg);
  std::vector<eval::NamedPolicy> policies;
  const Forest policy = load(policy_path);
  const Aggregation policy_agg = o.aggregate ? cfg.aggregate : default_aggregation(policy.method());
  if (policy.num_features() != ds.num_features()) {
    throw DataError("evaluation data has " + std::to_string(ds.num_features()) +
                    " covariates, model expects " + std::to_string(policy.num_features()));
  }
  policies.push_back({"Causal-policy forest",
                      predict_batch(policy, ds.covariates(), policy_agg, threads).actions});
  if (!plugin_path.empty()) {
    const Forest plugin = load(plugin_path);
    policies.push_back({"Plug-in causal forest",
                        predict_batch(plugin, ds.covariates(), default_aggregation(plugin.method()),
                                      threads)
                            .actions});
  }

  const eval::EvalReport report =
      propensity.empty() ? eval::build_report(tau0, policies)
                         : eval::build_report(tau0, policies, &ds, propensity);
  ensure_dir(cfg.out);
  const std::string text = eval::report_table(report);
  write_text(cfg.out / "report.txt", text);
  write_text(cfg.out / "report.csv", eval::report_csv(report));
  std::fputs(text.c_str(), stdout);
  return kOk;
}

int cmd_verify(const Overrides& o, std::size_t trials, bool inject_fault) {
  const std::uint64_t seed = o.seed.value_or(1);
  if (trials == 0) {
    std::fprintf(stderr, "warning: trials=0, nothing to verify\n");
    std::printf("verify-theorem: 0/0 instances passed\n");
    return kOk;
  }
  equivalence::SuiteOptions options;
  options.inject_sign_flip = inject_fault;
  const auto r = equivalence::run_theorem_suite(trials, seed, options);
  std::printf("verify-theorem: %zu/%zu instances passed (seed %llu)\n", r.passed, r.trials,
              static_cast<unsigned long long>(seed));
  if (r.failed() > 0) {
    std::printf("FAILED: %zu instances where the welfare argmax and the restricted "
                "least-squares argmin differ\n",
                r.failed());
    return kVerificationFailed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal-policy forest: policy learning with honest {-1,1} random forests"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config, "INI run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed,
                 "Seed override (simulate: DGP seed, train: forest seed, verify-theorem: suite seed)");
  app.add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--aggregate", o.aggregate, "Tree aggregation: vote | tau_mean")
      ->check(CLI::IsMember({"vote", "tau_mean"}));

  auto* simulate = app.add_subcommand("simulate", "Write train.csv and eval.csv from the synthetic design");

  std::string data_path;
  auto* train_cmd = app.add_subcommand("train", "Train the causal-policy forest (and plug-in baseline)");
  train_cmd->add_option("--data", data_path, "Training CSV")->required()->check(CLI::ExistingFile);

  std::string model_path, predict_data, predict_out;
  auto* predict = app.add_subcommand("predict", "Write action,vote for each row of a covariate CSV");
  predict->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  predict->add_option("--data", predict_data, "Covariate CSV")->required()->check(CLI::ExistingFile);
  predict->add_option("--output", predict_out, "Prediction CSV (default <out>/predictions.csv)");

  std::string eval_data, policy_model, plugin_model, model_dir;
  auto* evaluate = app.add_subcommand("evaluate", "Policy value / regret report against ground truth");
  evaluate->add_option("--data", eval_data, "Evaluation CSV with tau0 (and e) columns")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--models", model_dir, "Directory holding policy.cpf / plugin.cpf");
  evaluate->add_option("--policy-model", policy_model, "Causal-policy forest model");
  evaluate->add_option("--plugin-model", plugin_model, "Plug-in baseline model");

  std::size_t trials = 1000;
  bool inject_fault = false;
  auto* verify = app.add_subcommand("verify-theorem",
                                    "Check welfare argmax == restricted least-squares argmin on random finite classes");
  verify->add_option("--trials", trials, "Number of random instances");
  verify->add_flag("--inject-fault", inject_fault, "Negate tau on the least-squares side (self-test)")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*train_cmd) return cmd_train(o, data_path);
    if (*predict) return cmd_predict(o, model_path, predict_data, predict_out);
    if (*evaluate) return cmd_evaluate(o, eval_data, policy_model, plugin_model, model_dir);
    if (*verify) return cmd_verify(o, trials, inject_fault);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const ModelFormatError& e) {
    std::fprintf(stderr, "model error: %s\n", e.what());
    return kDataError;
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kDataError;
  } catch (const TrainingError& e) {
    std::fprintf(stderr, "training error: %s\n", e.what());
    return kTrainingError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIoError;
  }
  return kOk;
}
