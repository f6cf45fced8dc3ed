#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cpf/csv.hpp"
#include "cpf/forest.hpp"
#include "cpf/synth.hpp"

namespace cpf::cli {

/// Everything a run needs. Loaded from an INI file with sections [dgp],
/// [forest], [baseline], [eval], [data] and [run]; see configs/default.ini.
struct RunConfig {
  synth::DgpConfig dgp;
  ForestParams forest;
  Aggregation aggregate = Aggregation::kVote;
  bool plugin_baseline = true;
  /// Rows in the held-out evaluation draw; 0 means dgp.n.
  std::size_t eval_n = 0;
  std::uint64_t eval_seed = 20250102;
  CsvSchema schema;
  std::filesystem::path out = "out";
  /// 0 means all available cores.
  int threads = 0;
};

/// Reads `path` over the defaults. Unknown sections or keys and out-of-range
/// values raise ConfigError.
RunConfig load_run_config(const std::filesystem::path& path);

/// Checks value ranges that do not depend on the data.
void check(const RunConfig& cfg);

}  // namespace cpf::cli
