// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vitalradar {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

enum class SampleQuality : std::uint8_t { valid = 0, rbm_suspect = 1, recovered = 2 };

struct FrequencyBand {
  double lo_hz = 0.0;
  double hi_hz = 0.0;

  bool contains(double f) const { return f >= lo_hz && f <= hi_hz; }
  double width() const { return hi_hz - lo_hz; }
};

// Complex slow-time x range-bin matrix, frame-major (bin index varies fastest).
struct RadarCube {
  std::vector<Complex> data;
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;
  double frame_rate_hz = 0.0;
  double wavelength_mm = 0.0;

  Complex& at(std::size_t frame, std::size_t bin) { return data[frame * num_bins + bin]; }
  const Complex& at(std::size_t frame, std::size_t bin) const {
    return data[frame * num_bins + bin];
  }
  std::span<const Complex> frame(std::size_t f) const {
    return {data.data() + f * num_bins, num_bins};
  }
};

struct SlowTimeSignal {
  std::vector<Complex> samples;
  double fs = 0.0;
  std::size_t source_bin = 0;
  double wavelength_mm = 0.0;
};

// Recovered chest displacement in mm. `t0_s` is the time of the first sample.
struct DisplacementSignal {
  std::vector<double> values;
  double fs = 0.0;
  std::vector<SampleQuality> quality;
  double t0_s = 0.0;

  std::size_t size() const { return values.size(); }
  double duration_s() const { return static_cast<double>(values.size()) / fs; }
  double end_time_s() const { return t0_s + duration_s(); }

  // Samples [begin, end) with quality and timing carried over.
  DisplacementSignal slice(std::size_t begin, std::size_t end) const;
};

inline DisplacementSignal DisplacementSignal::slice(std::size_t begin, std::size_t end) const {
  DisplacementSignal out;
  out.fs = fs;
  out.t0_s = t0_s + static_cast<double>(begin) / fs;
  out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(begin),
                    values.begin() + static_cast<std::ptrdiff_t>(end));
  if (quality.size() == values.size()) {
    out.quality.assign(quality.begin() + static_cast<std::ptrdiff_t>(begin),
                       quality.begin() + static_cast<std::ptrdiff_t>(end));
  } else {
    out.quality.assign(out.values.size(), SampleQuality::valid);
  }
  return out;
}

// Wraps an angle into (-pi, pi].
inline double wrap_phase(double x) {
  double y = std::remainder(x, kTwoPi);
  if (y <= -kPi) y += kTwoPi;
  return y;
}

}  // namespace vitalradar
