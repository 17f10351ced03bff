// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Synthetic monitoring scenes: ground-truth chest displacement (breathing,
// heartbeat, random body movement) modulated into complex baseband range
// profiles with static clutter and complex white noise.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "vitalradar/types.hpp"

namespace vitalradar {

// A knot of a piecewise-linear rate schedule. Two knots at the same time
// produce a step.
struct RateKnot {
  double t_s = 0.0;
  double bpm = 0.0;
};

enum class BreathingPattern { eupnea, apnea, irregular };

struct BreathingParams {
  double rate_bpm = 15.0;
  double amplitude_mm = 4.0;
  // Relative amplitudes of harmonics 2..H.
  std::vector<double> harmonic_coeffs{0.15, 0.05};
  BreathingPattern pattern = BreathingPattern::eupnea;
  // [start_s, end_s] intervals without breathing (pattern == apnea).
  std::vector<std::pair<double, double>> apnea_segments;
  // Per-cycle rate jitter in percent (pattern == irregular).
  double jitter_pct = 0.0;
  // Overrides rate_bpm when non-empty.
  std::vector<RateKnot> rate_schedule;
};

struct HeartbeatParams {
  double rate_bpm = 72.0;
  double amplitude_mm = 0.2;
  std::vector<double> harmonic_coeffs{0.3, 0.1};
  std::vector<RateKnot> rate_schedule;
};

// step: displaced by amplitude_mm for duration_s, 0.2 s raised-cosine edges.
// ramp: moves amplitude_mm at constant speed over duration_s and stays there.
// sinusoid, band_limited_noise (0-2 Hz, peak amplitude_mm): confined to the
// event with 0.2 s tapers inside it.
enum class RbmKind { step, ramp, band_limited_noise, sinusoid };

struct RbmEvent {
  double start_s = 0.0;
  double duration_s = 1.0;
  double amplitude_mm = 10.0;
  RbmKind kind = RbmKind::step;
  double freq_hz = 1.0;  // sinusoid only
};

struct ScenarioConfig {
  double carrier_wavelength_mm = 5.0;
  double frame_rate_hz = 50.0;
  double duration_s = 60.0;
  std::size_t subject_range_bin = 20;
  std::size_t num_range_bins = 64;
  BreathingParams breathing;
  HeartbeatParams heartbeat;
  std::vector<RbmEvent> rbm_events;
  // Per-bin SNR of the subject return; nullopt disables noise.
  std::optional<double> snr_db = 20.0;
  double clutter_amplitude = 2.0;
  std::uint64_t rng_seed = 1;

  std::size_t num_frames() const;
  void validate() const;
};

struct GroundTruth {
  double fs = 0.0;
  std::vector<double> total_mm;
  std::vector<double> breathing_mm;
  std::vector<double> heart_mm;
  std::vector<double> rbm_mm;
  std::vector<double> breathing_bpm;
  std::vector<double> heart_bpm;
  std::vector<std::uint8_t> rbm_mask;
  // Carrier phase offset applied by modulate().
  double initial_phase_rad = 0.0;

  std::size_t size() const { return total_mm.size(); }
};

struct SynthesizedSeries {
  std::vector<double> displacement_mm;
  std::vector<double> rate_bpm;
};

// Raised-cosine transition used for every smoothed edge: 0 for u <= 0,
// 1 for u >= 1.
double raised_cosine_edge(double u);

SynthesizedSeries synth_breathing(const BreathingParams& params, std::size_t n, double fs,
                                  std::uint64_t seed = 0);
SynthesizedSeries synth_heartbeat(const HeartbeatParams& params, std::size_t n, double fs);

struct RbmSeries {
  std::vector<double> displacement_mm;
  std::vector<std::uint8_t> mask;
};

RbmSeries synth_rbm(const std::vector<RbmEvent>& events, std::size_t n, double fs,
                    std::uint64_t seed = 0);

// Builds ground truth for a config (components summed exactly).
GroundTruth synth_ground_truth(const ScenarioConfig& config);

// Fills truth.initial_phase_rad with the drawn carrier phase.
RadarCube modulate(const ScenarioConfig& config, GroundTruth& truth);

struct Scenario {
  RadarCube cube;
  GroundTruth truth;
};

Scenario run_scenario(const ScenarioConfig& config);

}  // namespace vitalradar
