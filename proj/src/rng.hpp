// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <random>

namespace vitalradar::detail {

// Independent, reproducible generator per (seed, stream) pair.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), stream, 0x5eedu};
  return std::mt19937_64(seq);
}

enum Stream : std::uint32_t {
  kStreamCarrierPhase = 1,
  kStreamClutter = 2,
  kStreamNoise = 3,
  kStreamBreathing = 4,
  kStreamRbm = 5,
};

}  // namespace vitalradar::detail
