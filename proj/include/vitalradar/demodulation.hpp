// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Phase demodulation: arctangent demodulation, item-by-item unwrapping and a
// higher-order-difference recovery in the style of unlimited sampling, which
// tolerates inter-sample phase jumps beyond pi as long as the N-th finite
// difference of the true phase stays below pi.

#include <cstdint>
#include <vector>

#include "vitalradar/types.hpp"

namespace vitalradar {

struct PhaseSeries {
  std::vector<double> values;
  double fs = 0.0;
  bool wrapped = true;
  // Per-sample flag: zero-magnitude input or a bound violation.
  std::vector<std::uint8_t> suspect;
};

struct UnwrapOptions {
  int order = 2;
  double bound_rad = 0.9 * kPi;
  // 3-tap median over the wrapped N-th differences before the bound test,
  // so that isolated noise spikes do not raise violations.
  bool median_prefilter = false;
  // Length of the initial stretch unwrapped item-by-item to fix the
  // integration constants. 0 uses the first `order` samples.
  double anchor_s = 0.0;
  // Throw BoundViolation instead of reporting it.
  bool strict = false;
};

struct RecoveryReport {
  // Largest |wrapped N-th difference| seen.
  double max_residual = 0.0;
  bool valid = true;
  // Indices i whose difference (over samples i-N..i) exceeded the bound.
  std::vector<std::size_t> violations;
};

struct RobustUnwrap {
  PhaseSeries phase;
  RecoveryReport report;
};

PhaseSeries arctan_demod(const SlowTimeSignal& signal);

PhaseSeries unwrap_conventional(const PhaseSeries& wrapped);

// Order-N recovery. The output equals the input plus an integer multiple of
// 2 pi at every sample. Inside violating stretches (and for N samples after
// them) it falls back to item-by-item unwrapping so that a violation costs
// at most a constant offset instead of a polynomial drift. A recursion that
// keeps stepping by a whole turn while the wrapped phase moves slowly is
// taken to have slipped and is redone item by item.
RobustUnwrap unwrap_robust(const PhaseSeries& wrapped, const UnwrapOptions& options = {});

// d = phase * lambda / (4 pi), mean removed. Suspect samples are marked
// rbm_suspect.
DisplacementSignal phase_to_displacement(const PhaseSeries& unwrapped, double wavelength_mm);

}  // namespace vitalradar
