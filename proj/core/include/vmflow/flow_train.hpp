#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vmflow/adam.hpp"
#include "vmflow/attn_mask.hpp"
#include "vmflow/cat_model.hpp"
#include "vmflow/losses.hpp"
#include "vmflow/rng.hpp"
#include "vmflow/var_encoder.hpp"

namespace vmflow {

enum class Variant { kMF, kVMF, kMFD, kVMFD, kFM, kRFM };

struct VariantTraits {
  bool variational = false;        // phi feeds h into theta, KL active
  bool dispersive = false;         // beta may be non-zero
  bool instantaneous_only = false;  // r = t always
};

VariantTraits variant_traits(Variant v);
std::string to_string(Variant v);
// Throws Error(kUnknownVariant).
Variant parse_variant(std::string_view name);

struct TrainConfig {
  Variant variant = Variant::kVMF;
  float alpha = 1e-4f;
  float beta = 0.5f;
  float tau = 1.0f;
  TimeSampling time;
  bool adaptive_l2 = false;
  float adaptive_power = 1.0f;
  float adaptive_c = 1e-3f;
  float cond_dropout = 0.1f;
  // Probability of training on the sampling layout: single group, no x_p,
  // and h drawn from the prior.
  float inference_layout_prob = 0.1f;
  double decay_factor = 0.5;
  AdamConfig adam;
};

// One training example set: z = (1 - t) x + t eps and v = eps - x.
struct FlowBatch {
  Tensor x;    // [B, sample_len, token_dim]
  Tensor c;    // [B, cond_len, cond_dim]
  Tensor eps;  // same shape as x
  Tensor z;
  Tensor v;
  std::vector<float> t;
  std::vector<float> r;

  std::size_t batch() const { return x.dim(0); }
};

FlowBatch make_flow_batch(const Tensor& x, const Tensor& c, const Tensor& eps, std::vector<float> t,
                          std::vector<float> r);

// u_t = v - (t - r) * u_dot, per example; a plain (detached) buffer.
std::vector<float> mean_flow_target(const FlowBatch& batch, std::span<const float> u_dot);

struct LossReport {
  float l2 = 0.0f;
  float kl = 0.0f;
  float dispersive = 0.0f;
  float total = 0.0f;
  float alpha = 0.0f;
  float beta = 0.0f;
  float tau = 0.0f;
  float t_mean = 0.0f;
  float r_mean = 0.0f;

  std::string to_json() const;
};

// Every random quantity of one step, drawn up front so a step can be
// re-evaluated exactly.
struct PreparedBatch {
  FlowBatch flow;
  GroupSplit split;
  AttentionMask mask;
  bool inference_layout = false;
  std::vector<std::uint8_t> drop_condition;
  Tensor reparam_noise;  // [B, latent_dim]
  Tensor prior_h;        // [B, latent_dim]
};

struct FieldResult {
  ThetaOutput theta;
  std::optional<VariationalOutput> phi;
};

struct LossTerms {
  Tensor total;
  Tensor l2;
  Tensor kl;
  Tensor dispersive;
  FieldResult field;
  std::vector<float> target;
  LossReport report;
};

class FlowTrainer {
 public:
  FlowTrainer(const ModelDims& dims, const TrainConfig& config, std::uint64_t seed);

  PreparedBatch prepare(const Tensor& x, const Tensor& c, std::uint64_t step) const;

  // The composite network (theta, phi) at explicit (z, r, t). Tangents seeded
  // on the arguments propagate to u, mu, log_var and h.
  FieldResult evaluate_field(const PreparedBatch& batch, const Tensor& z, const Tensor& r, const Tensor& t) const;

  // Loss with the mean-flow target from a JVP in direction (v, 0, 1). With
  // `fixed_target` the JVP is skipped and that target is used instead.
  LossTerms compute_loss(const PreparedBatch& batch, const std::vector<float>* fixed_target = nullptr) const;

  // compute_loss + backward + one Adam update. Throws Error(kNonFinite) with
  // the loss report in the message, leaving parameters untouched.
  LossReport train_step(const PreparedBatch& batch);
  LossReport step(const Tensor& x, const Tensor& c);

  bool variational() const;
  const TrainConfig& config() const { return config_; }
  const ModelDims& dims() const { return dims_; }
  CatModel& theta() { return theta_; }
  const CatModel& theta() const { return theta_; }
  VarEncoder& phi() { return phi_; }
  const VarEncoder& phi() const { return phi_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  Adam& optimizer() { return adam_; }
  std::uint64_t steps_taken() const { return steps_; }

  // Parameters, optimizer moments and the step counter.
  std::vector<NamedTensor> checkpoint_tensors() const;
  void load_checkpoint_tensors(const std::vector<NamedTensor>& tensors, bool with_optimizer);

 private:
  ModelDims dims_;
  TrainConfig config_;
  Rng rng_;
  Rng init_rng_;
  CatModel theta_;
  VarEncoder phi_;
  ParamStore params_;
  Adam adam_;
  std::uint64_t steps_ = 0;
};

}  // namespace vmflow
