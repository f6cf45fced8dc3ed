#include <cmath>
#include <string>

#include "cpf/csv.hpp"
#include "cpf/forest.hpp"
#include "cpf/policy_eval.hpp"
#include "cpf/synth.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cpf;
using testing::quote;
using testing::read_file;
using testing::run_command;
using testing::TempDir;

namespace {

const std::string kCli = CPF_CLI_PATH;

testing::CommandResult cli(const std::string& args) { return run_command(quote(kCli) + " " + args); }

// Small enough to run in well under a second.
void write_toy_config(const std::filesystem::path& path, const std::filesystem::path& out) {
  testing::write_file(path,
                      "[dgp]\nn = 200\np = 4\nseed = 5\n"
                      "[forest]\nnum_trees = 5\nsubsample = 120\nmin_arm_count = 5\n"
                      "mtry = 2\nmax_depth = 4\nseed = 9\n"
                      "[eval]\nn = 300\nseed = 6\n"
                      "[run]\nout = " + out.string() + "\n");
}

double parse_after(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + key.size()));
}

}  // namespace

TEST_CASE("simulate writes deterministic train and eval files") {
  TempDir tmp;
  write_toy_config(tmp / "toy.ini", tmp / "a");
  const auto first = cli("--config " + quote(tmp / "toy.ini") + " simulate");
  REQUIRE_MESSAGE(first.exit_code == 0, first.output);
  const auto second =
      cli("--config " + quote(tmp / "toy.ini") + " --out " + quote(tmp / "b") + " simulate");
  REQUIRE(second.exit_code == 0);
  CHECK(read_file(tmp / "a/train.csv") == read_file(tmp / "b/train.csv"));
  CHECK(read_file(tmp / "a/eval.csv") == read_file(tmp / "b/eval.csv"));
  CHECK(read_file(tmp / "a/train.csv") != read_file(tmp / "a/eval.csv"));

  const CsvTable train = CsvTable::read(tmp / "a/train.csv");
  const CsvTable eval = CsvTable::read(tmp / "a/eval.csv");
  CHECK(train.num_rows() == 200);
  CHECK(eval.num_rows() == 300);
  CHECK(train.header() == std::vector<std::string>{"x0", "x1", "x2", "x3", "d", "y", "tau0", "e",
                                                   "y0", "y1"});

  // The printed oracle value matches a recomputation from the written file.
  const auto tau0 = train.numeric_column("tau0");
  const double v = eval::oracle_policy_value(synth::true_first_best(tau0), tau0);
  CHECK(parse_after(first.output, "oracle policy value: train ") == doctest::Approx(v).epsilon(1e-6));

  // The file content equals the in-process generator.
  synth::DgpConfig cfg;
  cfg.n = 200;
  cfg.p = 4;
  cfg.seed = 5;
  const auto sd = synth::generate(cfg);
  CHECK(tau0 == sd.tau0);
  CHECK(train.numeric_column("y") == sd.base.outcomes());

  // --seed overrides the DGP seed.
  const auto reseeded = cli("--config " + quote(tmp / "toy.ini") + " --out " +
                            quote(tmp / "c") + " --seed 6 simulate");
  REQUIRE(reseeded.exit_code == 0);
  CHECK(read_file(tmp / "c/train.csv") != read_file(tmp / "a/train.csv"));
}

TEST_CASE("train, predict and evaluate round trip") {
  TempDir tmp;
  write_toy_config(tmp / "toy.ini", tmp / "run");
  const std::string cfg = "--config " + quote(tmp / "toy.ini") + " ";
  REQUIRE(cli(cfg + "simulate").exit_code == 0);

  const auto trained = cli(cfg + "train --data " + quote(tmp / "run/train.csv"));
  REQUIRE_MESSAGE(trained.exit_code == 0, trained.output);
  const Forest policy = load(tmp / "run/policy.cpf");
  CHECK(policy.trees().size() == 5);
  CHECK(policy.method() == ForestMethod::kPolicy);
  CHECK(load(tmp / "run/plugin.cpf").method() == ForestMethod::kPlugin);
  CHECK(std::filesystem::exists(tmp / "run/train_summary.csv"));

  // Byte-identical on rerun, and across thread counts.
  const auto again = cli(cfg + "--out " + quote(tmp / "again") + " --threads 1 train --data " +
                         quote(tmp / "run/train.csv"));
  REQUIRE(again.exit_code == 0);
  CHECK(read_file(tmp / "again/policy.cpf") == read_file(tmp / "run/policy.cpf"));
  CHECK(read_file(tmp / "again/plugin.cpf") == read_file(tmp / "run/plugin.cpf"));

  const auto predicted = cli("predict --model " + quote(tmp / "run/policy.cpf") + " --data " +
                             quote(tmp / "run/eval.csv") + " --output " + quote(tmp / "pred.csv"));
  REQUIRE_MESSAGE(predicted.exit_code == 0, predicted.output);
  const CsvTable pred = CsvTable::read(tmp / "pred.csv");
  CHECK(pred.header() == std::vector<std::string>{"action", "vote"});
  CHECK(pred.num_rows() == 300);
  const auto actions = pred.binary_column("action");
  const auto votes = pred.numeric_column("vote");
  const Dataset eval_ds = load_csv(tmp / "run/eval.csv");
  for (std::size_t i = 0; i < pred.num_rows(); ++i) {
    CHECK(votes[i] == policy.predict_vote(eval_ds.row(i)));
    CHECK(actions[i] == policy.predict_policy(eval_ds.row(i)));
  }

  const auto evaluated =
      cli(cfg + "evaluate --data " + quote(tmp / "run/eval.csv") + " --models " + quote(tmp / "run"));
  REQUIRE_MESSAGE(evaluated.exit_code == 0, evaluated.output);
  const std::string table = read_file(tmp / "run/report.txt");
  CHECK(evaluated.output == table);
  const auto oracle_line = table.find("Oracle policy");
  REQUIRE(oracle_line != std::string::npos);
  CHECK(oracle_line < table.find("Causal-policy forest"));
  CHECK(table.find("Causal-policy forest") < table.find("Plug-in causal forest"));

  const CsvTable report = CsvTable::read(tmp / "run/report.csv");
  REQUIRE(report.num_rows() == 3);
  CHECK(report.cell(0, 0) == "Oracle policy");
  const auto value = report.numeric_column("policy_value");
  const auto regret = report.numeric_column("regret");
  CHECK(regret[0] == 0.0);
  for (std::size_t r = 0; r < 3; ++r) CHECK(regret[r] == value[0] - value[r]);
  CHECK(table.substr(oracle_line).find("0.0000") != std::string::npos);
}

TEST_CASE("verify-theorem") {
  const auto ok = cli("verify-theorem --trials 1000 --seed 3");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("1000/1000") != std::string::npos);

  const auto none = cli("verify-theorem --trials 0");
  CHECK(none.exit_code == 0);
  CHECK(none.output.find("warning") != std::string::npos);

  const auto faulty = cli("verify-theorem --trials 200 --inject-fault");
  CHECK(faulty.exit_code == 5);
  CHECK(faulty.output.find("FAILED") != std::string::npos);
}

TEST_CASE("exit codes distinguish failure classes") {
  TempDir tmp;
  // Configuration: unknown key.
  testing::write_file(tmp / "bad.ini", "[forest]\nnum_tree = 5\n");
  CHECK(cli("--config " + quote(tmp / "bad.ini") + " simulate").exit_code == 2);
  // Configuration: unknown subcommand.
  CHECK(cli("frobnicate").exit_code == 2);

  // Data: malformed CSV.
  testing::write_file(tmp / "bad.csv", "x0,d,y\n1.0,1,2\nfoo,0,1\n");
  CHECK(cli("--out " + quote(tmp / "o") + " train --data " + quote(tmp / "bad.csv")).exit_code == 3);

  // Data: evaluation file without ground truth.
  write_toy_config(tmp / "toy.ini", tmp / "run");
  const std::string cfg = "--config " + quote(tmp / "toy.ini") + " ";
  REQUIRE(cli(cfg + "simulate").exit_code == 0);
  REQUIRE(cli(cfg + "train --data " + quote(tmp / "run/train.csv")).exit_code == 0);
  const Dataset ds = load_csv(tmp / "run/eval.csv");
  write_dataset_csv(tmp / "no_truth.csv", ds);
  CHECK(cli(cfg + "evaluate --data " + quote(tmp / "no_truth.csv") + " --models " +
            quote(tmp / "run"))
            .exit_code == 3);

  // Data: corrupt model.
  testing::write_file(tmp / "bad.cpf", "causal-policy-forest v9\n");
  CHECK(cli("predict --model " + quote(tmp / "bad.cpf") + " --data " + quote(tmp / "run/eval.csv"))
            .exit_code == 3);

  // Training: too few controls to cover any leaf.
  std::string text = "x0,x1,d,y\n";
  for (int i = 0; i < 400; ++i) {
    text += std::to_string(i) + "," + std::to_string(i % 7) + "," + (i % 50 == 0 ? "0" : "1") + ",1\n";
  }
  testing::write_file(tmp / "sparse.csv", text);
  CHECK(cli(cfg + "--out " + quote(tmp / "s") + " train --data " + quote(tmp / "sparse.csv"))
            .exit_code == 4);

  // I/O: output directory cannot be created.
  testing::write_file(tmp / "blocker", "");
  CHECK(cli(cfg + "--out " + quote(tmp / "blocker/sub") + " simulate").exit_code == 1);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"default.ini", "table1.ini"}) {
    const auto r = cli("--config " + quote(std::filesystem::path(CPF_CONFIG_DIR) / name) +
                       " verify-theorem --trials 1");
    CHECK_MESSAGE(r.exit_code == 0, r.output);
  }
}
