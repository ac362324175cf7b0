#include "vmflow/attn_mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vmflow/error.hpp"
#include "vmflow/rng.hpp"

namespace vmflow {

void GroupSplit::validate(std::size_t expected_len) const {
  if (sizes.empty() || cumsum.size() != sizes.size() + 1 || cumsum.front() != 0 || cumsum.back() != expected_len) {
    throw Error(ErrorCode::kInvalidArgument,
                "group split: boundaries do not cover sample_len " + std::to_string(expected_len));
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0 || cumsum[i + 1] != cumsum[i] + sizes[i]) {
      throw Error(ErrorCode::kInvalidArgument, "group split: inconsistent sizes and cumsum");
    }
  }
}

std::vector<double> group_count_probabilities(std::size_t sample_len, double decay_factor) {
  if (sample_len == 0) throw Error(ErrorCode::kInvalidArgument, "split: sample_len must be >= 1");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "split: decay_factor must lie in (0, 1]");
  }
  std::vector<double> p(sample_len);
  if (decay_factor == 1.0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(sample_len));
    return p;
  }
  const double base = (1.0 - decay_factor) / (1.0 - std::pow(decay_factor, static_cast<double>(sample_len)));
  for (std::size_t i = 0; i < sample_len; ++i) p[i] = base * std::pow(decay_factor, static_cast<double>(i));
  return p;
}

GroupSplit split_from_cuts(std::size_t sample_len, std::vector<std::size_t> cuts) {
  if (sample_len == 0) throw Error(ErrorCode::kInvalidArgument, "split: sample_len must be >= 1");
  std::sort(cuts.begin(), cuts.end());
  if (std::adjacent_find(cuts.begin(), cuts.end()) != cuts.end()) {
    throw Error(ErrorCode::kInvalidArgument, "split: duplicate cut points");
  }
  for (auto c : cuts) {
    if (c < 1 || c >= sample_len) throw Error(ErrorCode::kInvalidArgument, "split: cut point outside [1, sample_len-1]");
  }
  GroupSplit split;
  split.cumsum.reserve(cuts.size() + 2);
  split.cumsum.push_back(0);
  split.cumsum.insert(split.cumsum.end(), cuts.begin(), cuts.end());
  split.cumsum.push_back(sample_len);
  for (std::size_t i = 0; i + 1 < split.cumsum.size(); ++i) split.sizes.push_back(split.cumsum[i + 1] - split.cumsum[i]);
  return split;
}

GroupSplit split_from_sizes(std::vector<std::size_t> sizes) {
  GroupSplit split;
  split.cumsum.push_back(0);
  for (auto s : sizes) {
    if (s == 0) throw Error(ErrorCode::kInvalidArgument, "split: group sizes must be positive");
    split.cumsum.push_back(split.cumsum.back() + s);
  }
  if (sizes.empty()) throw Error(ErrorCode::kInvalidArgument, "split: no groups");
  split.sizes = std::move(sizes);
  return split;
}

GroupSplit single_group(std::size_t sample_len) { return split_from_cuts(sample_len, {}); }

GroupSplit split_with_decay(std::size_t sample_len, double decay_factor, Rng& rng) {
  const auto p = group_count_probabilities(sample_len, decay_factor);
  std::size_t groups = 1;
  if (decay_factor == 1.0) {
    groups = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(sample_len)));
  } else {
    const double u = rng.uniform_double();
    double acc = 0.0;
    groups = sample_len;  // absorbs rounding in the tail
    for (std::size_t i = 0; i < sample_len; ++i) {
      acc += p[i];
      if (u < acc) {
        groups = i + 1;
        break;
      }
    }
  }
  // N - 1 distinct interior cuts via a partial Fisher-Yates shuffle.
  std::vector<std::size_t> pool(sample_len - 1);
  std::iota(pool.begin(), pool.end(), std::size_t{1});
  const std::size_t n_cuts = groups - 1;
  for (std::size_t i = 0; i < n_cuts; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                            static_cast<std::int64_t>(pool.size() - 1)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n_cuts);
  return split_from_cuts(sample_len, std::move(pool));
}

AttentionMask build_mask(std::size_t sample_len, std::size_t cond_len, std::size_t latent_len, const GroupSplit& split) {
  if (sample_len == 0) throw Error(ErrorCode::kInvalidArgument, "mask: sample_len must be >= 1");
  split.validate(sample_len);

  AttentionMask mask;
  mask.cond_len = cond_len;
  mask.latent_len = latent_len;
  mask.sample_len = sample_len;
  mask.visible_len = sample_len - split.sizes.back();
  mask.split = split;

  const std::size_t ctx = mask.context_len();
  const std::size_t vis = mask.visible_len;
  const std::size_t seq = mask.seq_len();
  const std::size_t xp0 = mask.visible_offset();
  const std::size_t z0 = mask.sample_offset();
  const auto& cs = split.cumsum;
  const std::size_t groups = split.groups();

  mask.blocked.assign(seq * seq, 1);
  auto open = [&](std::size_t row_begin, std::size_t row_end, std::size_t col_begin, std::size_t col_end) {
    for (std::size_t r = row_begin; r < row_end; ++r)
      for (std::size_t c = col_begin; c < col_end; ++c) mask.blocked[r * seq + c] = 0;
  };

  open(0, seq, 0, ctx);

  // x_p rows: group i sees x_p groups 0..i-1.
  for (std::size_t i = 0; i + 1 < groups; ++i) open(xp0 + cs[i], xp0 + cs[i + 1], xp0, xp0 + cs[i]);
  // z rows: group i+1 sees x_p groups 0..i.
  for (std::size_t i = 0; i + 1 < groups; ++i) open(z0 + cs[i + 1], z0 + cs[i + 2], xp0, xp0 + std::min(cs[i + 1], vis));
  // z rows: own group only within z.
  for (std::size_t i = 0; i < groups; ++i) open(z0 + cs[i], z0 + cs[i + 1], z0 + cs[i], z0 + cs[i + 1]);

  return mask;
}

std::string AttentionMask::to_ascii() const {
  const std::size_t seq = seq_len();
  std::string out;
  out.reserve(seq * (seq + 1));
  for (std::size_t r = 0; r < seq; ++r) {
    for (std::size_t c = 0; c < seq; ++c) out.push_back(blocked[r * seq + c] ? '#' : '.');
    out.push_back('\n');
  }
  return out;
}

std::string AttentionMask::to_pgm() const {
  const std::size_t seq = seq_len();
  std::ostringstream os;
  os << "P2\n" << seq << ' ' << seq << "\n255\n";
  for (std::size_t r = 0; r < seq; ++r) {
    for (std::size_t c = 0; c < seq; ++c) os << (c ? " " : "") << (blocked[r * seq + c] ? 0 : 255);
    os << '\n';
  }
  return os.str();
}

}  // namespace vmflow
