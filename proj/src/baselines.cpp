#include "cpf/baselines.hpp"

namespace cpf::baselines {

std::vector<std::uint8_t> oracle_policy(const synth::SyntheticDataset& sd) {
  return synth::true_first_best(sd);
}

Forest train_plugin_forest(const Dataset& ds, const ForestParams& params, int threads) {
  TrainOptions options;
  options.method = ForestMethod::kPlugin;
  options.threads = threads;
  return train(ds, params, options);
}

}  // namespace cpf::baselines
