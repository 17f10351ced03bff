// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "vitalradar/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vitalradar/errors.hpp"
#include "vitalradar/fft.hpp"
#include "vitalradar/kernels.hpp"
#include "vitalradar/rbm_filter.hpp"

namespace vitalradar {
namespace {

constexpr std::size_t kZeroPad = 4;
constexpr double kMaxSnrDb = 60.0;
// Neighbours of an interpolated peak must lie within 40 dB of it.
constexpr double kLobeFloor = 0.01;
constexpr double kLeakageMargin = 2.0;
// 14 dB between the 0.5 and 0.99 points of the logistic.
const double kConfidenceScale = 14.0 / std::log(99.0);

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

double suspect_fraction(const DisplacementSignal& d) {
  if (d.quality.empty()) return 0.0;
  const auto n = std::count(d.quality.begin(), d.quality.end(), SampleQuality::rbm_suspect);
  return static_cast<double>(n) / static_cast<double>(d.quality.size());
}

RateEstimate coast_estimate(double t_s, double value, double window_s) {
  RateEstimate e;
  e.t_s = t_s;
  e.value_bpm = value;
  e.confidence = 0.0;
  e.source = EstimateSource::coast;
  e.window_s = window_s;
  return e;
}

}  // namespace

std::string source_label(const RateEstimate& e) {
  switch (e.source) {
    case EstimateSource::fundamental:
      return "fundamental";
    case EstimateSource::harmonic:
      return "harmonic(" + std::to_string(e.harmonic) + ")";
    case EstimateSource::coast:
      break;
  }
  return "coast";
}

double snr_confidence(double snr_db) { return 1.0 / (1.0 + std::exp(-(snr_db - 6.0) / kConfidenceScale)); }

std::vector<SpectralPeak> find_peaks(const DisplacementSignal& d, const FrequencyBand& band,
                                     std::size_t max_peaks, double floor_db) {
  const std::size_t n = d.size();
  if (n < 4 || !(d.fs > 0.0)) throw EmptyBand("window too short for spectral analysis");
  const double lo = std::max(band.lo_hz, 2.0 * d.fs / static_cast<double>(n));
  const double hi = std::min(band.hi_hz, 0.5 * d.fs);
  if (!(lo < hi)) throw EmptyBand("band not resolvable in this window");

  double mean = 0.0;
  for (double v : d.values) mean += v;
  mean /= static_cast<double>(n);
  const std::size_t nfft = kZeroPad * n;
  std::vector<double> buf(nfft, 0.0);
  const std::vector<double> w = make_window(WindowKind::hann, n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = (d.values[i] - mean) * w[i];
  const RealFft fft(nfft);
  std::vector<Complex> spec(fft.num_bins());
  fft.forward(buf, spec);
  std::vector<double> mag(spec.size());
  kernels::magnitude_squared(spec, mag);
  for (double& m : mag) m = std::sqrt(m);

  const double df = d.fs / static_cast<double>(nfft);
  const auto k_lo = static_cast<std::size_t>(std::ceil(lo / df));
  const auto k_hi = std::min(static_cast<std::size_t>(std::floor(hi / df)), mag.size() - 1);
  if (k_lo > k_hi) throw EmptyBand("band narrower than one bin");
  const double med = median_of({mag.begin() + static_cast<std::ptrdiff_t>(k_lo),
                                mag.begin() + static_cast<std::ptrdiff_t>(k_hi + 1)});

  std::vector<std::size_t> maxima;
  for (std::size_t k = 1; k + 1 < mag.size(); ++k) {
    if (mag[k] > mag[k - 1] && mag[k] >= mag[k + 1]) maxima.push_back(k);
  }
  // Sidelobe of a stronger line: within twice the Hann sidelobe envelope
  // 1 / (pi d |d^2 - 1|) at a distance of d signal bins.
  auto leakage = [&](std::size_t k) {
    for (std::size_t j : maxima) {
      if (mag[j] <= mag[k]) continue;
      const double dist = std::abs(static_cast<double>(j) - static_cast<double>(k)) / static_cast<double>(kZeroPad);
      const double envelope = dist <= 1.5 ? 1.0 : 1.0 / (kPi * dist * (dist * dist - 1.0));
      if (mag[k] <= kLeakageMargin * envelope * mag[j]) return true;
    }
    return false;
  };

  std::vector<SpectralPeak> peaks;
  for (std::size_t k : maxima) {
    if (k < k_lo || k > k_hi) continue;
    if (leakage(k)) continue;
    double snr = med > 0.0 ? 20.0 * std::log10(mag[k] / med) : kMaxSnrDb;
    snr = std::min(snr, kMaxSnrDb);
    if (snr < floor_db) continue;
    double offset = 0.0;
    double level = mag[k];
    // Near a spectral null the log neighbours are meaningless and the
    // parabola extrapolates wildly; interpolate only across a proper lobe.
    if (mag[k - 1] > kLobeFloor * mag[k] && mag[k + 1] > kLobeFloor * mag[k]) {
      const double a = std::log(mag[k - 1]), b = std::log(mag[k]), c = std::log(mag[k + 1]);
      const double denom = a - 2.0 * b + c;
      if (denom < 0.0) {
        offset = 0.5 * (a - c) / denom;
        level = std::exp(b - 0.25 * (a - c) * offset);
      }
    }
    SpectralPeak p;
    p.freq_hz = std::clamp((static_cast<double>(k) + offset) * df, lo, hi);
    p.magnitude = level;
    p.local_snr_db = snr;
    peaks.push_back(p);
  }
  if (peaks.empty()) throw EmptyBand("no spectral peak above the noise floor");
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const SpectralPeak& x, const SpectralPeak& y) { return x.magnitude > y.magnitude; });
  if (peaks.size() > max_peaks) peaks.resize(max_peaks);
  return peaks;
}

RateEstimate estimate_breathing(const DisplacementSignal& d, double window_s, const FrequencyBand& band,
                                double floor_db) {
  const double t = d.end_time_s();
  std::vector<SpectralPeak> peaks;
  try {
    peaks = find_peaks(d, band, 1, floor_db);
  } catch (const EmptyBand&) {
    return coast_estimate(t, 0.0, window_s);
  }
  RateEstimate e;
  e.t_s = t;
  e.value_bpm = 60.0 * peaks.front().freq_hz;
  e.confidence = snr_confidence(peaks.front().local_snr_db);
  e.source = EstimateSource::fundamental;
  e.window_s = window_s;
  return e;
}

std::vector<Candidate> harmonic_candidates(const std::vector<SpectralPeak>& peaks, double f_breath_hz,
                                           const FrequencyBand& heart_band, const HarmonicParams& params) {
  if (params.max_divisor < 1) throw InvalidArgument("harmonic divisor count must be >= 1");
  std::vector<Candidate> out;
  for (const SpectralPeak& p : peaks) {
    bool interfered = false;
    if (f_breath_hz > 0.0) {
      for (int m = 1; m <= params.breath_harmonics; ++m) {
        if (std::abs(p.freq_hz - m * f_breath_hz) <= params.guard_hz) interfered = true;
      }
    }
    if (interfered) continue;
    for (int k = 1; k <= params.max_divisor; ++k) {
      const double f = p.freq_hz / k;
      // Tolerate rounding at the band edges (2.4 / 3 lands just below 0.8).
      const double tol = 1e-9 * f;
      if (f < heart_band.lo_hz - tol || f > heart_band.hi_hz + tol) continue;
      out.push_back({60.0 * f, k, p.local_snr_db, p.freq_hz});
    }
  }
  if (out.empty()) throw NoCandidates("every heart-band candidate was excluded");
  return out;
}

double measurement_variance(double snr_db, const KalmanParams& params) {
  return params.r0 * std::pow(10.0, -snr_db / 10.0);
}

KalmanStep kalman_step(const TrackState& state, const std::vector<Candidate>& candidates, double dt,
                       const KalmanParams& params) {
  if (!(dt > 0.0)) throw InvalidArgument("kalman_step needs dt > 0");
  KalmanStep out;
  out.state = state;
  out.state.last_update_t = state.last_update_t + dt;
  const double p_pred = state.variance + params.q * dt;
  const double x_pred = state.rate_bpm;
  const double gate = params.gate_sigma * std::sqrt(p_pred);

  const Candidate* best = nullptr;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const Candidate& c : candidates) {
    const double nu = c.bpm - x_pred;
    if (std::abs(nu) > gate) continue;
    const double s = p_pred + measurement_variance(c.local_snr_db, params);
    const double score = -0.5 * nu * nu / s - 0.5 * std::log(s);
    if (score > best_score) {
      best_score = score;
      best = &c;
    }
  }

  RateEstimate& e = out.estimate;
  e.t_s = out.state.last_update_t;
  if (best != nullptr) {
    const double r = measurement_variance(best->local_snr_db, params);
    const double gain = p_pred / (p_pred + r);
    out.state.rate_bpm = x_pred + gain * (best->bpm - x_pred);
    out.state.variance = (1.0 - gain) * p_pred;
    out.state.miss_count = 0;
    e.value_bpm = out.state.rate_bpm;
    e.confidence = snr_confidence(best->local_snr_db);
    e.source = best->k == 1 ? EstimateSource::fundamental : EstimateSource::harmonic;
    e.harmonic = best->k;
    return out;
  }

  out.state.variance = p_pred;
  out.state.miss_count = state.miss_count + 1;
  if (out.state.miss_count >= params.max_misses && !candidates.empty()) {
    const Candidate* strongest = &candidates.front();
    for (const Candidate& c : candidates) {
      const bool stronger = c.local_snr_db > strongest->local_snr_db;
      const bool tie_closer = c.local_snr_db == strongest->local_snr_db &&
                              std::abs(c.bpm - x_pred) < std::abs(strongest->bpm - x_pred);
      if (stronger || tie_closer) strongest = &c;
    }
    out.state.rate_bpm = strongest->bpm;
    out.state.variance = params.reinit_variance;
    out.state.miss_count = 0;
  }
  e.value_bpm = out.state.rate_bpm;
  e.confidence = 0.0;
  e.source = EstimateSource::coast;
  return out;
}

TrackResult track(const DisplacementSignal& d, const TrackParams& params) {
  if (!(d.fs > 0.0)) throw InvalidArgument("sample rate must be positive");
  if (!(params.hop_s > 0.0) || !(params.breath_window_s > 0.0) || !(params.heart_window_s > 0.0)) {
    throw InvalidArgument("window and hop lengths must be positive");
  }
  const auto samples = [&](double s) { return static_cast<std::size_t>(std::llround(s * d.fs)); };
  const std::size_t nb = samples(params.breath_window_s);
  const std::size_t nh = samples(params.heart_window_s);
  const std::size_t hop = std::max<std::size_t>(samples(params.hop_s), 1);
  const std::size_t longest = std::max(nb, nh);
  if (d.size() < longest) {
    throw SignalTooShort("signal of " + std::to_string(d.duration_s()) + " s is shorter than one " +
                         std::to_string(static_cast<double>(longest) / d.fs) + " s window");
  }

  const FrequencyBand search{params.heart_band.lo_hz,
                             std::min(params.harmonics.max_divisor * params.heart_band.hi_hz,
                                      params.harmonic_search_hi_hz)};
  const double dt = static_cast<double>(hop) / d.fs;

  TrackResult result;
  TrackState state;
  state.rate_bpm = params.kalman.initial_bpm;
  state.variance = params.kalman.initial_variance;
  state.last_update_t = d.t0_s + static_cast<double>(longest - hop) / d.fs;
  double last_breath = 0.0;

  for (std::size_t end = longest; end <= d.size(); end += hop) {
    const double t = d.t0_s + static_cast<double>(end) / d.fs;

    const DisplacementSignal bw = d.slice(end - nb, end);
    RateEstimate breath;
    if (suspect_fraction(bw) > params.max_suspect_fraction) {
      breath = coast_estimate(t, last_breath, params.breath_window_s);
    } else {
      breath = estimate_breathing(bw, params.breath_window_s, params.breath_band, params.peak_floor_db);
      if (breath.coast()) breath.value_bpm = last_breath;
    }
    if (!breath.coast()) last_breath = breath.value_bpm;
    result.breathing.push_back(breath);

    const DisplacementSignal hw = d.slice(end - nh, end);
    std::vector<Candidate> candidates;
    if (suspect_fraction(hw) <= params.max_suspect_fraction) {
      try {
        const auto peaks = find_peaks(hw, search, params.max_peaks, params.peak_floor_db);
        const double fb = breath.coast() ? 0.0 : breath.value_bpm / 60.0;
        candidates = harmonic_candidates(peaks, fb, params.heart_band, params.harmonics);
      } catch (const EmptyBand&) {
      } catch (const NoCandidates&) {
      }
    }
    KalmanStep step = kalman_step(state, candidates, dt, params.kalman);
    state = step.state;
    step.estimate.t_s = t;
    step.estimate.window_s = params.heart_window_s;
    result.heart.push_back(step.estimate);
  }
  return result;
}

}  // namespace vitalradar
