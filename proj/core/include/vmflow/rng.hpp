#pragma once

#include <cstdint>
#include <string_view>

namespace vmflow {

// Counter-based generator: the n-th draw of a stream is a pure function of
// (key, n), so a run is replayable from its seed and independent streams can
// be split off by name without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  // Derives an independent stream. Same parent key + label -> same stream.
  Rng split(std::string_view label) const;
  Rng split(std::uint64_t index) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 24 random bits, exactly representable as float.
  float uniform();
  // Uniform on [0, 1) with 53 random bits.
  double uniform_double();
  // Uniform integer on [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Standard normal via Box-Muller; stable across platforms and stdlibs.
  float normal();
  bool bernoulli(double p);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t x);

 private:
  struct FromKey {};
  Rng(FromKey, std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  float spare_ = 0.0f;
};

}  // namespace vmflow
