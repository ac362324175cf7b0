#pragma once

#include "vmflow/model_dims.hpp"
#include "vmflow/params.hpp"

namespace vmflow {

class Rng;

inline constexpr float kLogVarMin = -10.0f;
inline constexpr float kLogVarMax = 10.0f;

struct VariationalOutput {
  Tensor mu;       // [B, latent_dim]
  Tensor log_var;  // [B, latent_dim], clamped to [kLogVarMin, kLogVarMax]
  Tensor h;        // [B, latent_dim] = mu + exp(log_var / 2) * noise
  Tensor noise;    // the reparameterization draw
};

// Encoder phi: a 3-layer MLP over [mean_pool(c), eps, x, z, t, r] producing
// (mu, log sigma^2) and the reparameterized latent h.
class VarEncoder {
 public:
  VarEncoder(const ModelDims& dims, Rng& init_rng);

  // c: [B, cond_len, cond_dim]; eps, x, z: [B, sample_len, token_dim];
  // r, t: [B]. Tangents on z and t flow through to mu, log_var and h.
  VariationalOutput forward(const Tensor& c, const Tensor& eps, const Tensor& x, const Tensor& z, const Tensor& r,
                            const Tensor& t, Rng& rng) const;
  // Same, with an explicit reparameterization draw of shape [B, latent_dim].
  VariationalOutput forward_with_noise(const Tensor& c, const Tensor& eps, const Tensor& x, const Tensor& z,
                                       const Tensor& r, const Tensor& t, const Tensor& noise) const;

  std::size_t input_width() const;
  const ModelDims& dims() const { return dims_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  ModelDims dims_;
  ParamStore params_;
};

}  // namespace vmflow
