#include "vmflow/adam.hpp"

#include <cmath>
#include <string>

#include "vmflow/error.hpp"

namespace vmflow {

void adam_update(Tensor& param, std::span<const float> grad, AdamState& state, const AdamConfig& config,
                 std::string_view name) {
  const std::size_t n = param.numel();
  if (grad.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "adam: grad for '" + std::string(name) + "' has " +
                                               std::to_string(grad.size()) + " entries, param has " +
                                               std::to_string(n));
  }
  if (!(config.beta1 > 0.0f && config.beta1 < 1.0f && config.beta2 > 0.0f && config.beta2 < 1.0f)) {
    throw Error(ErrorCode::kInvalidArgument, "adam: betas must lie in (0, 1)");
  }
  for (float g : grad) {
    if (!std::isfinite(g)) {
      throw Error(ErrorCode::kNonFinite, "adam: non-finite gradient for parameter '" + std::string(name) + "'");
    }
  }
  if (state.first_moment.empty() && state.second_moment.empty()) {
    state.first_moment.assign(n, 0.0f);
    state.second_moment.assign(n, 0.0f);
  }
  if (state.first_moment.size() != n || state.second_moment.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "adam: state buffers for '" + std::string(name) + "' do not match param");
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const float correction1 = static_cast<float>(1.0 - std::pow(static_cast<double>(config.beta1), t));
  const float correction2 = static_cast<float>(1.0 - std::pow(static_cast<double>(config.beta2), t));
  auto values = param.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    const float g = grad[i];
    float& m = state.first_moment[i];
    float& v = state.second_moment[i];
    m = config.beta1 * m + (1.0f - config.beta1) * g;
    v = config.beta2 * v + (1.0f - config.beta2) * g * g;
    const float m_hat = m / correction1;
    const float v_hat = v / correction2;
    values[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

void Adam::step(ParamStore& params) {
  auto& entries = params.entries();
  if (states_.size() != entries.size()) states_.resize(entries.size());
  // Validate everything first so a bad grad never leaves a half-applied step.
  for (auto& e : entries) {
    for (float g : e.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw Error(ErrorCode::kNonFinite, "adam: non-finite gradient for parameter '" + e.name + "'");
      }
    }
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    adam_update(entries[i].tensor, entries[i].tensor.grad(), states_[i], config_, entries[i].name);
  }
}

std::uint64_t Adam::step_count() const { return states_.empty() ? 0 : states_.front().step_count; }

std::vector<NamedTensor> Adam::state_tensors(const ParamStore& params) const {
  std::vector<NamedTensor> out;
  const auto& entries = params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& shape = entries[i].tensor.shape();
    const std::size_t n = entries[i].tensor.numel();
    std::vector<float> m(n, 0.0f), v(n, 0.0f);
    if (i < states_.size() && !states_[i].first_moment.empty()) {
      m = states_[i].first_moment;
      v = states_[i].second_moment;
    }
    out.push_back({"adam/m/" + entries[i].name, Tensor::from_data(shape, std::move(m))});
    out.push_back({"adam/v/" + entries[i].name, Tensor::from_data(shape, std::move(v))});
  }
  out.push_back({"adam/step", Tensor::from_data({1}, {static_cast<float>(step_count())})});
  return out;
}

void Adam::load_state(const ParamStore& params, const std::vector<NamedTensor>& tensors) {
  auto find = [&](const std::string& name) -> const Tensor* {
    for (const auto& t : tensors)
      if (t.name == name) return &t.tensor;
    return nullptr;
  };
  const Tensor* step = find("adam/step");
  if (!step) throw Error(ErrorCode::kFormat, "adam: checkpoint has no optimizer state");
  const auto steps = static_cast<std::uint64_t>(step->item());
  const auto& entries = params.entries();
  states_.assign(entries.size(), {});
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Tensor* m = find("adam/m/" + entries[i].name);
    const Tensor* v = find("adam/v/" + entries[i].name);
    if (!m || !v || m->numel() != entries[i].tensor.numel() || v->numel() != entries[i].tensor.numel()) {
      throw Error(ErrorCode::kFormat, "adam: missing or mismatched state for '" + entries[i].name + "'");
    }
    states_[i].first_moment = m->to_vector();
    states_[i].second_moment = v->to_vector();
    states_[i].step_count = steps;
  }
}

}  // namespace vmflow
