#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vmflow/tensor.hpp"

namespace vmflow {

// A set of (x, c) pairs with x stored as sample_len x token_dim and c as
// cond_len x cond_dim, both flattened.
struct Dataset {
  std::size_t sample_len = 0;
  std::size_t token_dim = 0;
  std::size_t cond_len = 1;
  std::size_t cond_dim = 0;
  std::vector<std::vector<float>> x;
  std::vector<std::vector<float>> c;
  std::vector<int> label;
  std::vector<int> mode;                 // GMM rows; -1 otherwise
  std::vector<std::vector<int>> tokens;  // token rows; empty otherwise

  std::size_t size() const { return x.size(); }
  void validate() const;
  // Rows `indices` as [n, sample_len, token_dim] and [n, cond_len, cond_dim].
  Tensor gather_x(const std::vector<std::size_t>& indices) const;
  Tensor gather_c(const std::vector<std::size_t>& indices) const;
  Dataset subset(const std::vector<std::size_t>& indices) const;
};

struct GmmMode {
  std::vector<float> mean;
  float scale = 1.0f;
  int label = 0;
};

struct GmmSpec {
  std::size_t dim = 2;
  std::vector<GmmMode> modes;
  std::size_t samples_per_mode = 100;
  std::size_t cond_dim = 8;
  std::uint64_t seed = 0;
};

// `modes` means evenly spaced on a circle in the first two coordinates.
GmmSpec ring_gmm_spec(std::size_t modes, float radius, float scale, std::size_t samples_per_mode,
                      bool shared_label, std::uint64_t seed);

// Rows are grouped by mode in spec order. Each label maps to a fixed random
// projection of its one-hot code (rows of a seeded cond_dim matrix).
Dataset make_gmm_dataset(const GmmSpec& spec);
std::vector<float> gmm_condition(const GmmSpec& spec, int label);

struct ToySequenceSpec {
  std::size_t vocab = 16;
  std::size_t length = 8;
  std::size_t dim = 8;
  std::size_t classes = 4;
  std::size_t tokens_per_class = 5;
  float continuation = 0.7f;  // probability of stepping to the next class token
  std::uint64_t codec_seed = 7;
};

// Per-position linear codec: token k at any position maps to codeword k.
class ToyCodec {
 public:
  explicit ToyCodec(const ToySequenceSpec& spec);

  std::vector<float> encode(const std::vector<int>& tokens) const;
  // Nearest codeword per position.
  std::vector<int> decode(std::span<const float> latent) const;
  // Smallest distance between two distinct codewords.
  double min_gap() const;
  const std::vector<float>& codebook() const { return codebook_; }
  const ToySequenceSpec& spec() const { return spec_; }

 private:
  ToySequenceSpec spec_;
  std::vector<float> codebook_;  // vocab x dim
};

// Normalized counts per vocab entry; the condition vector of a sequence.
std::vector<float> token_histogram(const std::vector<int>& tokens, std::size_t vocab);
// Tokens the generator may emit for class `label`.
std::vector<int> class_tokens(const ToySequenceSpec& spec, int label);
std::vector<int> sample_sequence(const ToySequenceSpec& spec, int label, std::uint64_t seed, std::uint64_t index);
// `count` sequences with labels cycling over the classes; c is the token
// histogram of the row's own sequence.
Dataset make_toy_dataset(const ToySequenceSpec& spec, std::size_t count, std::uint64_t seed);

// JSONL rows {x, c, meta: {mode | tokens, label}}. Each row also carries
// "shape": [sample_len, token_dim, cond_len, cond_dim].
void write_dataset_jsonl(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_jsonl(const std::filesystem::path& path);

}  // namespace vmflow
