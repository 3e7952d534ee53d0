#pragma once

#include <cstdint>
#include <string>

#include "acgad/counterfactual.hpp"
#include "acgad/inject.hpp"
#include "acgad/select.hpp"
#include "acgad/train.hpp"

namespace acgad {

// Every tunable of the pipeline, filled from a flat key=value file. Unknown
// keys are rejected loudly; stage seeds are derived from the root seed when
// the pipeline runs.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;
  bool inject = false;  // corrupt the loaded graph before training
  InjectionConfig inject_cfg;
  SelectionConfig select_cfg;
  CfConfig cf;
  ConsistencyConfig consistency;
  TrainConfig train_cfg;
  PairOptions pair_opts;
};

// Applies one key=value entry; throws std::runtime_error on unknown keys or
// unparsable values.
void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value);

// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Canonical echo of the effective configuration, one key=value per line, in
// a fixed key order. Reapplying the echo reproduces the config.
std::string echo_config(const RunConfig& cfg);

}  // namespace acgad
