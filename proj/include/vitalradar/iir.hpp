// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <span>
#include <vector>

namespace vitalradar {

// Second-order section, a0 normalised to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct BandpassDesign {
  std::vector<Biquad> sections;
  int prototype_order = 0;
};

// Digital Butterworth band-pass (bilinear transform, prewarped edges).
// The prototype order is the smallest that keeps the single-pass passband
// loss over [f_lo, f_hi] within `pass_loss_db` and reaches `stop_atten_db`
// at 0.5 f_lo and 1.5 f_hi.
BandpassDesign design_butterworth_bandpass(double f_lo, double f_hi, double fs,
                                           double pass_loss_db, double stop_atten_db,
                                           int max_order = 16);

// Complex response of the cascade at frequency f.
std::complex<double> frequency_response(const BandpassDesign& design, double f, double fs);

// Forward-backward filtering with odd extension at both ends and
// steady-state initial conditions, as in scipy.signal.sosfiltfilt.
std::vector<double> sosfiltfilt(const BandpassDesign& design, std::span<const double> x);

}  // namespace vitalradar
