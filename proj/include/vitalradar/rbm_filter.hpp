// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Band-limiting and random-body-movement mitigation on the recovered
// displacement. Movement shows up as short bursts of frame energy (or of
// energy outside the physiological bands) in a short-time Fourier
// decomposition; the affected frames are rebuilt from their clean
// neighbours before resynthesis.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "vitalradar/types.hpp"

namespace vitalradar {

enum class WindowKind { hann, hamming };

// One-sided STFT, frame-major. Frame m starts at sample m*hop - pad with
// pad = window_len - hop, so every signal sample is covered by the same
// number of frames; samples outside the signal are zero.
struct Spectrogram {
  std::vector<Complex> values;
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;
  std::size_t window_len = 0;
  std::size_t hop = 0;
  double fs = 0.0;
  WindowKind window_kind = WindowKind::hann;
  std::size_t signal_len = 0;
  std::size_t pad = 0;
  double t0_s = 0.0;

  Complex& at(std::size_t frame, std::size_t bin) { return values[frame * num_bins + bin]; }
  const Complex& at(std::size_t frame, std::size_t bin) const {
    return values[frame * num_bins + bin];
  }
  std::ptrdiff_t frame_start(std::size_t m) const {
    return static_cast<std::ptrdiff_t>(m * hop) - static_cast<std::ptrdiff_t>(pad);
  }
  // Sample index at the centre of the frame's window (may lie outside the signal).
  double frame_center(std::size_t m) const {
    return static_cast<double>(frame_start(m)) + 0.5 * static_cast<double>(window_len);
  }
  double frame_time_s(std::size_t m) const { return t0_s + frame_center(m) / fs; }
  double bin_hz(std::size_t k) const {
    return static_cast<double>(k) * fs / static_cast<double>(window_len);
  }
};

// Periodic window of the given length.
std::vector<double> make_window(WindowKind kind, std::size_t length);

// Throws NonColaWindow unless the squared window overlap-adds to a constant
// at the given hop (the condition for weighted overlap-add resynthesis).
void check_cola(WindowKind kind, std::size_t window_len, std::size_t hop);

Spectrogram stft(const DisplacementSignal& d, std::size_t window_len, std::size_t hop,
                 WindowKind kind = WindowKind::hann);

// Weighted overlap-add inverse; returns signal_len samples, quality valid.
DisplacementSignal istft(const Spectrogram& s);

struct RbmFilterParams {
  double window_s = 4.0;
  double hop_s = 0.5;
  WindowKind window = WindowKind::hann;
  FrequencyBand breath_band{0.1, 1.2};
  FrequencyBand heart_band{0.8, 3.5};
  // Out-of-band energy ratio threshold.
  double rho = 0.6;
  // Frame energy threshold relative to the running median.
  double kappa = 10.0;
  // Length of the centred running-median window.
  double median_span_s = 60.0;
  // Moving samples: periodicity residual of the smoothed speed above this
  // multiple of its median over the record.
  double motion_factor = 12.0;
  // Clean stretch used on each side of an event to measure a baseline jump.
  double level_span_s = 10.0;
  double max_gap_s = 4.0;
  // Throw UnrecoverableSegment for the first over-long run.
  bool strict = false;
};

// Half-open sample interval.
struct SampleSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct QualityMask {
  std::vector<std::uint8_t> corrupted;  // per frame
  std::vector<std::uint8_t> samples;    // per signal sample
  // Located movement events. Every frame whose window overlaps one is
  // corrupted.
  std::vector<SampleSpan> events;
  std::vector<double> frame_energy;
  std::vector<double> median_energy;
  std::vector<double> out_of_band_ratio;

  std::size_t num_corrupted() const;
};

// True when the bin's frequency cell [f - df/2, f + df/2] meets the band.
bool bin_in_band(double f_hz, double df_hz, const FrequencyBand& band);

// Movement is located at sample level. The smoothed speed is compared with
// itself one breathing period earlier and later (the period is the lag that
// predicts best); samples where both predictions miss by more than
// motion_factor times the median miss are moving, as are `prior` samples
// (rbm_suspect). Moving samples closer than one window form one event.
// Frames are also screened on energy: total energy (DC excluded, so a
// baseline offset left by a movement does not inflate every later frame)
// above kappa times the running median, or out-of-band share above rho in a
// frame of at least median energy; a screened frame with no moving sample
// adds its hop cell as an event. Every frame whose window overlaps an event
// is corrupted, and flagged samples are those within half a window of an
// event.
QualityMask detect_rbm_frames(const Spectrogram& s, const FrequencyBand& breath_band,
                              const FrequencyBand& heart_band, const RbmFilterParams& params = {},
                              std::span<const SampleQuality> prior = {});

struct GapSegment {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct MitigationResult {
  DisplacementSignal signal;
  QualityMask mask;
  std::vector<GapSegment> unrecoverable;
};

// stft -> detect -> remove the baseline jump across each event -> fill the
// stretch covered by each recoverable run of corrupted frames with offset,
// slope and a few breathing and heart-band sinusoids fitted to the clean
// samples around it -> take the in-band bins of corrupted frames from the
// filled signal, zero their out-of-band bins -> istft -> band-limit to
// breath ∪ heart.
// Clean frames are only affected by the final band-limit, so the operation
// is idempotent on clean input. Runs of corrupted frames whose fully
// rebuilt stretch exceeds max_gap_s are not filled; their samples are
// marked rbm_suspect instead (or UnrecoverableSegment is thrown when strict).
MitigationResult mitigate(const DisplacementSignal& d, const RbmFilterParams& params = {});

// Zero-phase brick-wall projection onto the union of the bands, computed on
// the even (mirrored) extension so that the ends do not wrap around.
// Idempotent. Below the lowest band only the mean is removed: a sharp cut
// that close to slow breathing costs up to half its amplitude near the ends.
DisplacementSignal band_limit(const DisplacementSignal& d, std::span<const FrequencyBand> bands);

// Zero-phase Butterworth band-pass, >= 40 dB down at 0.5 f_lo and 1.5 f_hi.
DisplacementSignal bandpass(const DisplacementSignal& d, double f_lo, double f_hi);

// frame_t_s,freq_hz,magnitude
void write_spectrogram_csv(const Spectrogram& s, const std::filesystem::path& path);

}  // namespace vitalradar
