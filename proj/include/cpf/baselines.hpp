#pragma once

#include <cstdint>
#include <vector>

#include "cpf/forest.hpp"
#include "cpf/synth.hpp"

namespace cpf::baselines {

/// Treat iff the true CATE is nonnegative.
std::vector<std::uint8_t> oracle_policy(const synth::SyntheticDataset& sd);

/// Plug-in causal forest: same honest subsampling and growth as the policy
/// forest, but splits maximize the size-weighted squared child CATE and the
/// policy thresholds the forest-averaged tau at zero.
Forest train_plugin_forest(const Dataset& ds, const ForestParams& params, int threads = 0);

}  // namespace cpf::baselines
