#pragma once

#include <cstdint>
#include <optional>

#include "vmflow/attn_mask.hpp"
#include "vmflow/cat_model.hpp"
#include "vmflow/rng.hpp"
#include "vmflow/tensor.hpp"

namespace vmflow {

// Anything that maps (c, z, r, t) to an average velocity. `cond` undefined
// means the null condition.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  // Called once per sampling call before any evaluation.
  virtual void begin(std::size_t /*batch*/, const Rng& /*rng*/) {}
  virtual Tensor velocity(const Tensor& cond, const Tensor& z, float r, float t) = 0;
};

struct SamplerConfig {
  std::size_t nfe = 1;
  float guidance_w = 1.5f;
  bool conditional = true;
  std::uint64_t seed = 0;
};

struct SampleResult {
  Tensor x;    // [B, sample_len, token_dim]
  Tensor eps;  // the starting noise
  std::size_t evaluations = 0;
};

// w * u_cond + (1 - w) * u_uncond.
Tensor guide(const Tensor& u_cond, const Tensor& u_uncond, float w);

// x = eps - u(c, eps, r = 0, t = 1). `cond` undefined runs one null-condition
// pass; w == 1 runs the conditional pass only.
SampleResult sample_one_nfe(VelocityField& field, const Tensor& cond, const Shape& shape, const Rng& rng, float w);
// Uniform grid t_k = 1 - k/K with x <- x - (t_k - t_{k+1}) u at each step.
SampleResult sample_multi_step(VelocityField& field, const Tensor& cond, const Shape& shape, const Rng& rng,
                               std::size_t steps, float w);
SampleResult sample(VelocityField& field, const Tensor& cond, const Shape& shape, const SamplerConfig& config);

// The trained transformer as a velocity field: single-group mask, no x_p,
// and for variational models h drawn from N(0, I) once per sampling call.
class CatVelocityField : public VelocityField {
 public:
  CatVelocityField(const CatModel& theta, bool variational);

  void begin(std::size_t batch, const Rng& rng) override;
  Tensor velocity(const Tensor& cond, const Tensor& z, float r, float t) override;

  std::size_t evaluations() const { return evaluations_; }
  const Tensor& latent() const { return h_; }

 private:
  const CatModel& theta_;
  bool variational_;
  AttentionMask mask_;
  Tensor h_;
  std::size_t evaluations_ = 0;
};

}  // namespace vmflow
