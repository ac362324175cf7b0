#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vmflow/attn_mask.hpp"
#include "vmflow/model_dims.hpp"
#include "vmflow/params.hpp"

namespace vmflow {

class Rng;

// Offsets of each segment in the concatenated token sequence.
struct SequenceLayout {
  std::size_t cond_len = 0;
  std::size_t latent_len = 0;
  std::size_t visible_len = 0;
  std::size_t sample_len = 0;

  std::size_t cond_offset() const { return 0; }
  std::size_t latent_offset() const { return cond_len; }
  std::size_t visible_offset() const { return cond_len + latent_len; }
  std::size_t sample_offset() const { return cond_len + latent_len + visible_len; }
  std::size_t seq_len() const { return sample_offset() + sample_len; }
};

struct ThetaInputs {
  Tensor c;    // [B, cond_len, cond_dim]; undefined -> c_null for every row
  Tensor h;    // [B, latent_tokens, latent_dim]; undefined or zero-size -> no h segment
  Tensor x_p;  // [B, visible_len, token_dim]; undefined or zero-size -> no x_p segment
  Tensor z;    // [B, sample_len, token_dim]
  Tensor t;    // [B]
  Tensor r;    // [B]
  // Optional per-example flags (size B); 1 replaces that row's c by c_null.
  std::vector<std::uint8_t> drop_condition;
};

struct ThetaOutput {
  Tensor u;       // [B, sample_len, token_dim]
  Tensor hidden;  // [B, sample_len * width], z-segment states after `disp_layer` blocks
};

// Causality-aware transformer: embeds [c | h | x_p | z] with segment and
// position embeddings, adds the (t, r) embedding to z tokens, runs pre-norm
// masked self-attention blocks and reads u off the z segment.
class CatModel {
 public:
  CatModel(const ModelDims& dims, Rng& init_rng);

  ThetaOutput forward(const ThetaInputs& in, const AttentionMask& mask) const;
  // t, r: [B] with 0 <= t, r <= 1. Returns [B, width].
  Tensor embed_time(const Tensor& t, const Tensor& r) const;

  const ModelDims& dims() const { return dims_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  Tensor condition_tokens(const ThetaInputs& in, std::size_t batch) const;
  Tensor block(std::size_t index, const Tensor& x, const AttentionMask& mask) const;
  const Tensor& p(const char* name) const;
  const Tensor& p(std::size_t block, const char* name) const;

  ModelDims dims_;
  ParamStore params_;
  Tensor freqs_;
};

}  // namespace vmflow
