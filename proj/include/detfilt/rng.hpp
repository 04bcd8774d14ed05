// Copyright 2026 The detfilt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Counter-based pseudo-random generation built on splitmix64 (Sebastiano
// Vigna's public-domain reference generator). The state is a counter advanced
// by the 64-bit golden ratio; each output is an avalanche mix of the counter,
// so replaying a stream from its seed is exact and cheap. Independent streams
// are derived from a master seed with the same mixing function, which keeps
// parallel work items replayable regardless of scheduling.

#pragma once

#include <cstdint>

namespace detfilt {

inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer (also usable as a standalone integer mixer).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Stream derivation: derive_stream(seed, tag) == mix64(seed ^ (mix64(tag) +
// golden)). Distinct tags give decorrelated streams from one master seed.
inline constexpr std::uint64_t derive_stream(std::uint64_t seed,
                                             std::uint64_t tag) {
  return mix64(seed ^ (mix64(tag) + kGolden64));
}

inline constexpr std::uint64_t derive_stream(std::uint64_t seed,
                                             std::uint64_t tag1,
                                             std::uint64_t tag2) {
  return derive_stream(derive_stream(seed, tag1), tag2);
}

inline constexpr std::uint64_t derive_stream(std::uint64_t seed,
                                             std::uint64_t tag1,
                                             std::uint64_t tag2,
                                             std::uint64_t tag3) {
  return derive_stream(derive_stream(seed, tag1, tag2), tag3);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGolden64;
    return mix64(state_);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform double in the open interval (0, 1); safe to feed into quantile
  // functions of unbounded families.
  double next_open_double() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace detfilt
