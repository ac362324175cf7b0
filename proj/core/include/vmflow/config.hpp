#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vmflow/flow_train.hpp"
#include "vmflow/model_dims.hpp"

namespace vmflow {

struct RunConfig {
  ModelDims dims;
  TrainConfig train;
  float guidance_w = 1.5f;
  std::size_t nfe = 1;
  std::size_t epochs = 10;
  std::size_t steps = 0;  // when non-zero, overrides epochs
  std::size_t batch_size = 64;
  std::size_t checkpoint_every = 0;  // epochs; 0 -> final only
  std::size_t log_every = 1;
  std::size_t num_samples = 100;
  std::uint64_t seed = 0;
  std::uint64_t sample_seed = 1;
  std::string dataset;
  std::string output_dir = "run";
};

// Parses a flat JSON object. Keys absent from the text take the variant's
// defaults; explicit values that contradict the variant throw kConfig, as do
// unknown keys and out-of-range values. An unknown variant throws
// kUnknownVariant.
RunConfig parse_run_config(const std::string& json_text,
                           const std::vector<std::pair<std::string, std::string>>& overrides = {});
// Reads VMFLOW_SEED when set.
void apply_seed_env(RunConfig& config);
std::string run_config_json(const RunConfig& config);

}  // namespace vmflow
