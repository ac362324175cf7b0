#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace vmflow {

class Rng;

// Partition of a sample's tokens into contiguous autoregressive groups.
struct GroupSplit {
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> cumsum;  // {0, ..., sample_len}, size = sizes.size() + 1

  std::size_t sample_len() const { return cumsum.empty() ? 0 : cumsum.back(); }
  std::size_t groups() const { return sizes.size(); }
  // Throws unless sizes/cumsum are consistent and cover exactly sample_len.
  void validate(std::size_t sample_len) const;
};

// Probability of drawing N = 1..sample_len groups: uniform when decay == 1,
// otherwise proportional to decay^(N-1).
std::vector<double> group_count_probabilities(std::size_t sample_len, double decay_factor);

GroupSplit split_with_decay(std::size_t sample_len, double decay_factor, Rng& rng);
// Builds a split from interior cut points in [1, sample_len - 1]; duplicates
// are rejected.
GroupSplit split_from_cuts(std::size_t sample_len, std::vector<std::size_t> cuts);
GroupSplit split_from_sizes(std::vector<std::size_t> sizes);
GroupSplit single_group(std::size_t sample_len);

// Blocked/open matrix over the token sequence [c | h | x_p | z].
// Entry 1 = blocked, 0 = attend.
struct AttentionMask {
  std::vector<std::uint8_t> blocked;  // seq_len x seq_len, row-major
  std::size_t cond_len = 0;
  std::size_t latent_len = 0;
  std::size_t visible_len = 0;
  std::size_t sample_len = 0;
  GroupSplit split;

  std::size_t seq_len() const { return cond_len + latent_len + visible_len + sample_len; }
  std::size_t context_len() const { return cond_len + latent_len; }
  std::size_t visible_offset() const { return context_len(); }
  std::size_t sample_offset() const { return context_len() + visible_len; }
  std::uint8_t at(std::size_t row, std::size_t col) const { return blocked[row * seq_len() + col]; }

  // '#' blocked, '.' open; one text row per sequence row.
  std::string to_ascii() const;
  // Plain PGM (P2): blocked cells black (0), open cells white (255).
  std::string to_pgm() const;
};

// Condition and latent columns are open for every row; c/h rows see only
// c/h. x_p rows of group i see x_p groups strictly before i. z rows of group
// i see the x_p groups before i and only their own z group.
AttentionMask build_mask(std::size_t sample_len, std::size_t cond_len, std::size_t latent_len, const GroupSplit& split);

}  // namespace vmflow
