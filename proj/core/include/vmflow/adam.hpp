#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "vmflow/params.hpp"

namespace vmflow {

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

struct AdamState {
  std::vector<float> first_moment;
  std::vector<float> second_moment;
  std::uint64_t step_count = 0;
};

// One bias-corrected Adam step on `param` in place. Throws (leaving param and
// state untouched) if any grad entry is non-finite.
void adam_update(Tensor& param, std::span<const float> grad, AdamState& state, const AdamConfig& config,
                 std::string_view name);

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Applies one update to every parameter using its accumulated grad.
  void step(ParamStore& params);

  const AdamConfig& config() const { return config_; }
  void set_lr(float lr) { config_.lr = lr; }
  std::uint64_t step_count() const;

  // Moments serialize as "adam/m/<param>" and "adam/v/<param>" plus a
  // one-element "adam/step" tensor.
  std::vector<NamedTensor> state_tensors(const ParamStore& params) const;
  void load_state(const ParamStore& params, const std::vector<NamedTensor>& tensors);

 private:
  AdamConfig config_;
  std::vector<AdamState> states_;
};

}  // namespace vmflow
