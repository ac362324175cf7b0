#pragma once

#include <cstddef>

namespace vmflow {

// Shapes shared by the transformer and the encoder.
struct ModelDims {
  std::size_t token_dim = 16;   // width of one latent token of x / z
  std::size_t sample_len = 8;   // tokens per sample
  std::size_t cond_dim = 16;    // width of one condition token
  std::size_t cond_len = 1;     // condition tokens per example
  std::size_t latent_dim = 16;  // width of the encoder latent h
  std::size_t latent_tokens = 1;  // 0 disables the h segment

  std::size_t width = 64;
  std::size_t heads = 4;
  std::size_t blocks = 4;
  std::size_t mlp_ratio = 4;
  std::size_t time_freqs = 16;
  float max_time_freq = 16.0f;  // rad per unit time of the fastest time feature
  std::size_t disp_layer = 2;  // blocks applied before reading dispersive features

  std::size_t phi_hidden = 128;

  // Throws Error(kConfig) on inconsistent values.
  void validate() const;
};

}  // namespace vmflow
