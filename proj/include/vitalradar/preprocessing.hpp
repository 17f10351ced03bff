// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// First pipeline stage: static clutter suppression, subject range-bin
// selection and slow-time extraction.

#include <vector>

#include "vitalradar/types.hpp"

namespace vitalradar {

inline constexpr double kDefaultDetectionThreshold = 3.0;

struct SubjectDetection {
  std::size_t bin = 0;
  // Selected slow-time variance over the median variance across bins (>= 1).
  double score = 0.0;
  std::vector<double> variances;
};

// Subtracts the complex slow-time mean of every range bin.
RadarCube remove_clutter(const RadarCube& cube);

// Picks the bin with the largest slow-time variance. Throws
// AmbiguousDetection when the score falls below `threshold`.
SubjectDetection detect_subject_bin(const RadarCube& cube,
                                    double threshold = kDefaultDetectionThreshold);

SlowTimeSignal extract_slow_time(const RadarCube& cube, std::size_t bin);

struct ArcCentering {
  SlowTimeSignal signal;
  Complex center;
  bool circle_fit = false;
};

// Removes the static offset of a single bin so that the samples lie on a
// circle around the origin. The offset is the centre of an algebraic circle
// fit through the I/Q trajectory; when the arc is too short for a
// well-conditioned fit the slow-time mean is used instead.
ArcCentering center_arc(const SlowTimeSignal& signal);

}  // namespace vitalradar
