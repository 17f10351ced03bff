// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Rate estimation on sliding windows of the filtered displacement.
// Breathing takes the dominant spectral line of the breathing band. Heart
// rate candidates are generated from every heart-band peak divided by
// 1..K (so a clean higher harmonic can stand in for a fundamental buried
// under breathing harmonics) and a scalar Kalman tracker picks among them.

#include <cstddef>
#include <string>
#include <vector>

#include "vitalradar/types.hpp"

namespace vitalradar {

inline constexpr double kDefaultPeakFloorDb = 12.0;

struct SpectralPeak {
  double freq_hz = 0.0;
  double magnitude = 0.0;
  // Peak over the median magnitude of the analysed band, in dB.
  double local_snr_db = 0.0;
};

enum class EstimateSource { fundamental, harmonic, coast };

struct RateEstimate {
  double t_s = 0.0;  // window end
  double value_bpm = 0.0;
  double confidence = 0.0;
  EstimateSource source = EstimateSource::coast;
  int harmonic = 1;  // k for EstimateSource::harmonic
  double window_s = 0.0;

  bool coast() const { return source == EstimateSource::coast; }
};

// "fundamental", "harmonic(k)" or "coast".
std::string source_label(const RateEstimate& e);

struct TrackState {
  double rate_bpm = 75.0;
  double variance = 900.0;
  // Time the state refers to; advanced by every step, coasting included.
  double last_update_t = 0.0;
  int miss_count = 0;
};

struct Candidate {
  double bpm = 0.0;
  int k = 1;
  double local_snr_db = 0.0;
  double source_hz = 0.0;
};

// Logistic map from local SNR to [0, 1]: 0.5 at 6 dB, 0.99 at 20 dB.
double snr_confidence(double snr_db);

// Hann-windowed, 4x zero-padded spectrum of the mean-removed signal. Local
// maxima inside the band whose level is at least `floor_db` above the
// median band level are refined by three-point parabolic interpolation of
// the log magnitude and returned sorted by magnitude. The analysed band is
// clipped below at two cycles per window. Throws EmptyBand when no peak
// clears the floor (or nothing of the band is analysable).
std::vector<SpectralPeak> find_peaks(const DisplacementSignal& d, const FrequencyBand& band,
                                     std::size_t max_peaks, double floor_db = kDefaultPeakFloorDb);

// Largest breathing-band peak over the whole of `d`; EmptyBand becomes a
// coast estimate with zero confidence.
RateEstimate estimate_breathing(const DisplacementSignal& d, double window_s,
                                const FrequencyBand& band = {0.1, 1.2},
                                double floor_db = kDefaultPeakFloorDb);

struct HarmonicParams {
  int max_divisor = 3;         // K
  int breath_harmonics = 5;    // M
  double guard_hz = 0.05;
};

// Candidates p/k (k = 1..K) inside the heart band. Peaks within guard_hz of
// m * f_breath (m = 1..M) are discarded; f_breath <= 0 disables the guard.
// Throws NoCandidates when nothing survives.
std::vector<Candidate> harmonic_candidates(const std::vector<SpectralPeak>& peaks, double f_breath_hz,
                                           const FrequencyBand& heart_band,
                                           const HarmonicParams& params = {});

struct KalmanParams {
  double q = 4.0;                          // bpm^2/s
  double r0 = 9.0 * 3.9810717055349722;    // r(6 dB) = 9 bpm^2
  double gate_sigma = 3.0;
  int max_misses = 5;
  double reinit_variance = 100.0;
  double initial_bpm = 75.0;
  double initial_variance = 900.0;
};

// r = r0 * 10^(-snr/10)
double measurement_variance(double snr_db, const KalmanParams& params);

struct KalmanStep {
  TrackState state;
  RateEstimate estimate;
};

// Random-walk predict, 3-sigma gate, maximum-likelihood association among
// gated candidates, scalar update. Coasts when nothing gates; after
// max_misses consecutive misses it restarts from the strongest candidate
// (the restart itself is reported as a coast).
KalmanStep kalman_step(const TrackState& state, const std::vector<Candidate>& candidates, double dt,
                       const KalmanParams& params = {});

struct TrackParams {
  FrequencyBand breath_band{0.1, 1.2};
  FrequencyBand heart_band{0.8, 3.5};
  // Upper edge of the band searched for heart harmonics; the effective
  // edge is min(K * heart_band.hi, this).
  double harmonic_search_hi_hz = 3.5;
  double breath_window_s = 12.0;
  double heart_window_s = 10.0;
  double hop_s = 1.0;
  double max_suspect_fraction = 0.3;
  double peak_floor_db = kDefaultPeakFloorDb;
  std::size_t max_peaks = 8;
  HarmonicParams harmonics;
  KalmanParams kalman;
};

struct TrackResult {
  std::vector<RateEstimate> breathing;
  std::vector<RateEstimate> heart;
};

// One row per hop, starting once the longer window is full. Windows with
// too many rbm_suspect samples coast. Throws SignalTooShort.
TrackResult track(const DisplacementSignal& d, const TrackParams& params = {});

}  // namespace vitalradar
