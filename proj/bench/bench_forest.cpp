// Serial reference vs OpenMP kernels for forest training and batch prediction.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "cpf/forest.hpp"
#include "cpf/synth.hpp"

namespace {

const cpf::synth::SyntheticDataset& train_data() {
  static const auto sd = cpf::synth::generate({.n = 10000, .p = 10, .seed = 11});
  return sd;
}

const cpf::synth::SyntheticDataset& grid_data() {
  static const auto sd = cpf::synth::generate({.n = 20000, .p = 10, .seed = 12});
  return sd;
}

cpf::ForestParams bench_params() {
  cpf::ForestParams params;
  params.num_trees = 32;
  params.subsample = 2000;
  params.tree = {.min_arm_count = 25, .mtry = 3, .max_depth = 8};
  return params;
}

const cpf::Forest& trained_forest() {
  static const auto forest = cpf::train(train_data().base, bench_params());
  return forest;
}

void BM_TrainSerial(benchmark::State& state) {
  const auto params = bench_params();
  for (auto _ : state) {
    benchmark::DoNotOptimize(cpf::train_serial(train_data().base, params));
  }
}
BENCHMARK(BM_TrainSerial)->Unit(benchmark::kMillisecond);

void BM_TrainParallel(benchmark::State& state) {
  const auto params = bench_params();
  cpf::TrainOptions options;
  options.threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(cpf::train(train_data().base, params, options));
  }
}
BENCHMARK(BM_TrainParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_PredictSerial(benchmark::State& state) {
  const auto& x = grid_data().base.covariates();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cpf::predict_batch_serial(trained_forest(), x, cpf::Aggregation::kVote));
  }
}
BENCHMARK(BM_PredictSerial)->Unit(benchmark::kMillisecond);

void BM_PredictParallel(benchmark::State& state) {
  const auto& x = grid_data().base.covariates();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cpf::predict_batch(trained_forest(), x, cpf::Aggregation::kVote, threads));
  }
}
BENCHMARK(BM_PredictParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
