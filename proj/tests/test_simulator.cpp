// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "scenes.hpp"
#include "vitalradar/demodulation.hpp"
#include "vitalradar/errors.hpp"
#include "vitalradar/fft.hpp"
#include "vitalradar/simulator.hpp"

using namespace vitalradar;

namespace {

std::vector<double> magnitude_spectrum(const std::vector<double>& x) {
  RealFft fft(x.size());
  std::vector<Complex> spec(fft.num_bins());
  fft.forward(x, spec);
  std::vector<double> mag(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) mag[k] = std::abs(spec[k]);
  return mag;
}

std::size_t argmax(const std::vector<double>& v, std::size_t from = 1) {
  return static_cast<std::size_t>(std::max_element(v.begin() + static_cast<std::ptrdiff_t>(from), v.end()) - v.begin());
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("breathing: zero amplitude gives a zero series") {
  BreathingParams p;
  p.amplitude_mm = 0.0;
  const auto s = synth_breathing(p, 500, 50.0);
  for (double v : s.displacement_mm) CHECK(v == 0.0);
}

TEST_CASE("breathing: 10 bpm over 12 s is two whole cycles") {
  BreathingParams p;
  p.rate_bpm = 10.0;
  p.harmonic_coeffs.clear();
  const auto s = synth_breathing(p, 600, 50.0);
  for (std::size_t i = 0; i < 300; ++i) CHECK(s.displacement_mm[i] == doctest::Approx(s.displacement_mm[i + 300]).epsilon(1e-9));
  int downward = 0;
  for (std::size_t i = 1; i < 600; ++i) downward += s.displacement_mm[i - 1] > 0.0 && s.displacement_mm[i] <= 0.0;
  CHECK(downward == 2);
}

TEST_CASE("breathing: 15 bpm spectral centroid at 0.25 Hz") {
  BreathingParams p;
  p.rate_bpm = 15.0;
  p.amplitude_mm = 1.0;
  p.harmonic_coeffs.clear();
  const double fs = 50.0;
  const auto s = synth_breathing(p, 3000, fs);
  const auto mag = magnitude_spectrum(s.displacement_mm);
  const std::size_t k = argmax(mag);
  double num = 0.0, den = 0.0;
  for (std::size_t j = k - 3; j <= k + 3; ++j) {
    num += mag[j] * static_cast<double>(j) * fs / 3000.0;
    den += mag[j];
  }
  CHECK(std::abs(num / den - 0.25) < 0.01);
}

TEST_CASE("breathing: rate track follows the schedule") {
  BreathingParams p;
  p.rate_schedule = {{0.0, 12.0}, {30.0, 12.0}, {30.0, 18.0}, {60.0, 18.0}};
  const auto s = synth_breathing(p, 3000, 50.0);
  CHECK(s.rate_bpm[100] == doctest::Approx(12.0));
  CHECK(s.rate_bpm[2000] == doctest::Approx(18.0));
}

TEST_CASE("breathing: apnea segment is silent") {
  BreathingParams p;
  p.pattern = BreathingPattern::apnea;
  p.apnea_segments = {{20.0, 35.0}};
  const auto s = synth_breathing(p, 3000, 50.0);
  // Allow the smoothed edges to settle.
  for (std::size_t i = 22 * 50; i < 33 * 50; ++i) CHECK(std::abs(s.displacement_mm[i]) < 1e-9);
}

TEST_CASE("heartbeat: zero amplitude, dominant line and exact period") {
  HeartbeatParams p;
  p.amplitude_mm = 0.0;
  for (double v : synth_heartbeat(p, 400, 50.0).displacement_mm) CHECK(v == 0.0);

  p.amplitude_mm = 0.1;
  p.rate_bpm = 72.0;
  const auto mag = magnitude_spectrum(synth_heartbeat(p, 3000, 50.0).displacement_mm);
  CHECK(static_cast<double>(argmax(mag)) * 50.0 / 3000.0 == doctest::Approx(1.2));

  p.rate_bpm = 60.0;
  const auto s = synth_heartbeat(p, 500, 50.0);
  for (std::size_t i = 0; i + 50 < s.displacement_mm.size(); ++i) {
    CHECK(s.displacement_mm[i] == doctest::Approx(s.displacement_mm[i + 50]).epsilon(1e-9));
  }
}

TEST_CASE("rbm: empty list, step and superposition") {
  const double fs = 50.0;
  const auto empty = synth_rbm({}, 500, fs);
  CHECK(std::all_of(empty.displacement_mm.begin(), empty.displacement_mm.end(), [](double v) { return v == 0.0; }));
  CHECK(std::all_of(empty.mask.begin(), empty.mask.end(), [](std::uint8_t m) { return m == 0; }));

  RbmEvent step;
  step.start_s = 5.0;
  step.duration_s = 3.0;
  step.amplitude_mm = 20.0;
  const auto s = synth_rbm({step}, 600, fs);
  for (std::size_t i = 0; i < static_cast<std::size_t>(4.9 * fs); ++i) CHECK(s.displacement_mm[i] == 0.0);
  for (std::size_t i = static_cast<std::size_t>(5.1 * fs) + 1; i < static_cast<std::size_t>(7.9 * fs); ++i) {
    CHECK(std::abs(s.displacement_mm[i] - 20.0) <= 0.1);
  }

  RbmEvent a, b;
  a.kind = b.kind = RbmKind::sinusoid;
  a.start_s = 2.0;
  a.duration_s = 4.0;
  a.freq_hz = 0.7;
  b.start_s = 4.0;
  b.duration_s = 3.0;
  b.freq_hz = 1.3;
  b.amplitude_mm = 6.0;
  const auto sa = synth_rbm({a}, 500, fs), sb = synth_rbm({b}, 500, fs), sab = synth_rbm({a, b}, 500, fs);
  for (std::size_t i = 0; i < 500; ++i) {
    CHECK(sab.displacement_mm[i] == doctest::Approx(sa.displacement_mm[i] + sb.displacement_mm[i]));
    CHECK(sab.mask[i] == (sa.mask[i] | sb.mask[i]));
  }
}

TEST_CASE("modulate: static scene gives a constant subject bin") {
  ScenarioConfig c = testing::clean_scene(4.0);
  c.breathing.amplitude_mm = 0.0;
  c.heartbeat.amplitude_mm = 0.0;
  c.clutter_amplitude = 0.0;
  const Scenario s = run_scenario(c);
  const Complex first = s.cube.at(0, c.subject_range_bin);
  CHECK(std::abs(first) > 0.0);
  for (std::size_t f = 0; f < s.cube.num_frames; ++f) CHECK(s.cube.at(f, c.subject_range_bin) == first);
}

TEST_CASE("modulate: 1 mm at 5 mm wavelength swings the phase by 4 pi / 5") {
  ScenarioConfig c = testing::clean_scene(8.0);
  c.breathing.harmonic_coeffs.clear();
  c.breathing.amplitude_mm = 1.0;
  c.heartbeat.amplitude_mm = 0.0;
  c.clutter_amplitude = 0.0;
  const Scenario s = run_scenario(c);
  PhaseSeries wrapped;
  wrapped.fs = c.frame_rate_hz;
  for (std::size_t f = 0; f < s.cube.num_frames; ++f) wrapped.values.push_back(std::arg(s.cube.at(f, c.subject_range_bin)));
  const PhaseSeries phase = unwrap_conventional(wrapped);
  const auto [lo, hi] = std::minmax_element(phase.values.begin(), phase.values.end());
  const double swing = 0.5 * (*hi - *lo);
  CHECK(swing == doctest::Approx(4.0 * kPi / 5.0).epsilon(1e-3));
}

TEST_CASE("modulate: measured subject-bin SNR matches the setting") {
  ScenarioConfig c;
  c.duration_s = 400.0;  // 2e4 samples
  c.breathing.amplitude_mm = 0.0;
  c.heartbeat.amplitude_mm = 0.0;
  c.clutter_amplitude = 0.0;
  c.snr_db = 20.0;
  const Scenario s = run_scenario(c);
  Complex mean{};
  for (std::size_t f = 0; f < s.cube.num_frames; ++f) mean += s.cube.at(f, c.subject_range_bin);
  mean /= static_cast<double>(s.cube.num_frames);
  double var = 0.0;
  for (std::size_t f = 0; f < s.cube.num_frames; ++f) var += std::norm(s.cube.at(f, c.subject_range_bin) - mean);
  var /= static_cast<double>(s.cube.num_frames);
  const double snr = 10.0 * std::log10(std::norm(mean) / var);
  CHECK(std::abs(snr - 20.0) < 1.0);
}

TEST_CASE("run_scenario: determinism, shape and component isolation") {
  ScenarioConfig c;
  c.heartbeat.amplitude_mm = 0.0;
  const Scenario a = run_scenario(c), b = run_scenario(c);
  CHECK(a.cube.data == b.cube.data);
  CHECK(a.truth.total_mm == b.truth.total_mm);
  CHECK(a.cube.num_frames == static_cast<std::size_t>(c.duration_s * c.frame_rate_hz));
  CHECK(a.cube.num_bins == c.num_range_bins);
  CHECK(a.cube.data.size() == a.cube.num_frames * a.cube.num_bins);
  for (double v : a.truth.heart_mm) CHECK(v == 0.0);
  for (std::size_t i = 0; i < a.truth.size(); ++i) {
    CHECK(a.truth.total_mm[i] == a.truth.breathing_mm[i] + a.truth.heart_mm[i] + a.truth.rbm_mm[i]);
  }
  ScenarioConfig other = c;
  other.rng_seed = 2;
  CHECK(run_scenario(other).cube.data != a.cube.data);
}

TEST_CASE("scenario validation rejects nonsense") {
  ScenarioConfig c;
  c.subject_range_bin = c.num_range_bins;
  CHECK_THROWS_AS(run_scenario(c), InvalidArgument);
  c = ScenarioConfig{};
  c.rbm_events.push_back({70.0, 2.0, 10.0, RbmKind::step, 1.0});
  CHECK_THROWS_AS(run_scenario(c), InvalidArgument);
}

}  // TEST_SUITE
