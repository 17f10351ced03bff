// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "vitalradar/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rng.hpp"
#include "vitalradar/errors.hpp"
#include "vitalradar/fft.hpp"

namespace vitalradar {
namespace {

constexpr double kRbmEdgeS = 0.2;
constexpr double kApneaTaperS = 0.5;
constexpr double kNoiseBandHz = 2.0;

void require_timebase(std::size_t n, double fs) {
  if (n == 0) throw InvalidArgument("sample count must be positive");
  if (!(fs > 0.0)) throw InvalidArgument("sample rate must be positive");
}

void require_harmonics(const std::vector<double>& coeffs, const char* what) {
  for (double c : coeffs) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw InvalidArgument(std::string(what) + " harmonic coefficients must lie in [0, 1]");
    }
  }
}

// Instantaneous rate and its running integral (in cycles) for a constant
// rate or a piecewise-linear schedule.
class RateProfile {
 public:
  RateProfile(double constant_bpm, const std::vector<RateKnot>& knots) : knots_(knots) {
    if (knots_.empty()) knots_.push_back({0.0, constant_bpm});
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      if (knots_[i].t_s < knots_[i - 1].t_s) {
        throw InvalidArgument("rate schedule knots must be sorted by time");
      }
    }
    for (const RateKnot& k : knots_) {
      if (!(k.bpm > 0.0)) throw InvalidArgument("rates must be positive");
    }
  }

  double bpm_at(double t) const {
    if (t <= knots_.front().t_s) return knots_.front().bpm;
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      const RateKnot& a = knots_[i - 1];
      const RateKnot& b = knots_[i];
      if (t < b.t_s) {
        const double u = (t - a.t_s) / (b.t_s - a.t_s);
        return a.bpm + u * (b.bpm - a.bpm);
      }
    }
    return knots_.back().bpm;
  }

  // Integral of bpm/60 from 0 to t, exact for the piecewise-linear schedule.
  double cycles_at(double t) const {
    double beats = 0.0;
    const RateKnot& first = knots_.front();
    const RateKnot& last = knots_.back();
    if (first.t_s > 0.0) beats += first.bpm * (std::min(t, first.t_s) - 0.0);
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      const RateKnot& a = knots_[i - 1];
      const RateKnot& b = knots_[i];
      const double lo = std::max(a.t_s, 0.0);
      const double hi = std::min(b.t_s, t);
      if (hi <= lo || b.t_s <= a.t_s) continue;
      auto at = [&](double x) { return a.bpm + (x - a.t_s) / (b.t_s - a.t_s) * (b.bpm - a.bpm); };
      beats += 0.5 * (at(lo) + at(hi)) * (hi - lo);
    }
    if (t > last.t_s) beats += last.bpm * (t - std::max(last.t_s, 0.0));
    return beats / 60.0;
  }

 private:
  std::vector<RateKnot> knots_;
};

double harmonic_waveform(double phase, const std::vector<double>& coeffs) {
  double v = std::sin(phase);
  for (std::size_t h = 0; h < coeffs.size(); ++h) {
    v += coeffs[h] * std::sin(static_cast<double>(h + 2) * phase);
  }
  return v;
}

// 1 inside [start, end], 0 outside [start - taper, end + taper].
double tapered_box_outside(double t, double start, double end, double taper) {
  return raised_cosine_edge((t - (start - taper)) / taper) *
         (1.0 - raised_cosine_edge((t - end) / taper));
}

// 1 inside [start + edge, end - edge], 0 outside [start, end].
double tapered_box_inside(double t, double start, double end, double edge) {
  return raised_cosine_edge((t - start) / edge) * (1.0 - raised_cosine_edge((t - (end - edge)) / edge));
}

// Integral of a raised-cosine unit step of width w centred on 0.
double smoothed_ramp_integral(double x, double w) {
  if (x <= -0.5 * w) return 0.0;
  if (x >= 0.5 * w) return x;
  const double u = x / w + 0.5;
  return w * (0.5 * u - std::sin(kPi * u) / (2.0 * kPi));
}

std::vector<double> band_limited_noise(std::size_t n, double fs, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = normal(rng);
  if (n < 2) return x;
  RealFft fft(n);
  std::vector<Complex> spec(fft.num_bins());
  fft.forward(x, spec);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(n);
    if (f > kNoiseBandHz) spec[k] = 0.0;
  }
  fft.inverse(spec, x);
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : x) v /= peak;
  }
  return x;
}

}  // namespace

double raised_cosine_edge(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return 0.5 - 0.5 * std::cos(kPi * u);
}

std::size_t ScenarioConfig::num_frames() const {
  return static_cast<std::size_t>(std::llround(duration_s * frame_rate_hz));
}

void ScenarioConfig::validate() const {
  if (!(frame_rate_hz > 0.0)) throw InvalidArgument("frame_rate_hz must be positive");
  if (!(duration_s > 0.0)) throw InvalidArgument("duration_s must be positive");
  if (!(carrier_wavelength_mm > 0.0)) throw InvalidArgument("carrier_wavelength_mm must be positive");
  if (num_range_bins == 0) throw InvalidArgument("num_range_bins must be positive");
  if (subject_range_bin >= num_range_bins) {
    throw InvalidArgument("subject_range_bin must be below num_range_bins");
  }
  if (num_frames() < 2) throw InvalidArgument("scenario must contain at least two frames");
  if (!(clutter_amplitude >= 0.0)) throw InvalidArgument("clutter_amplitude must be non-negative");
  if (snr_db && !std::isfinite(*snr_db)) throw InvalidArgument("snr_db must be finite");
  if (!(breathing.rate_bpm > 0.0) || !(heartbeat.rate_bpm > 0.0)) {
    throw InvalidArgument("rates must be positive");
  }
  if (!(breathing.amplitude_mm >= 0.0) || !(heartbeat.amplitude_mm >= 0.0)) {
    throw InvalidArgument("amplitudes must be non-negative");
  }
  require_harmonics(breathing.harmonic_coeffs, "breathing");
  require_harmonics(heartbeat.harmonic_coeffs, "heartbeat");
}

SynthesizedSeries synth_breathing(const BreathingParams& params, std::size_t n, double fs,
                                  std::uint64_t seed) {
  require_timebase(n, fs);
  if (!(params.rate_bpm > 0.0)) throw InvalidArgument("breathing rate must be positive");
  if (!(params.amplitude_mm >= 0.0)) throw InvalidArgument("breathing amplitude must be non-negative");
  require_harmonics(params.harmonic_coeffs, "breathing");
  const RateProfile profile(params.rate_bpm, params.rate_schedule);

  SynthesizedSeries out;
  out.displacement_mm.resize(n);
  out.rate_bpm.resize(n);

  if (params.pattern == BreathingPattern::irregular) {
    auto rng = detail::make_rng(seed, detail::kStreamBreathing);
    const double jitter = params.jitter_pct / 100.0;
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    double multiplier = 1.0 + jitter * uniform(rng);
    double cycles = 0.0;
    double cycle_index = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      const double bpm = profile.bpm_at(t) * multiplier;
      out.rate_bpm[i] = bpm;
      out.displacement_mm[i] =
          params.amplitude_mm * harmonic_waveform(kTwoPi * cycles, params.harmonic_coeffs);
      cycles += bpm / 60.0 / fs;
      if (std::floor(cycles) > cycle_index) {
        cycle_index = std::floor(cycles);
        multiplier = 1.0 + jitter * uniform(rng);
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      out.rate_bpm[i] = profile.bpm_at(t);
      out.displacement_mm[i] = params.amplitude_mm *
                               harmonic_waveform(kTwoPi * profile.cycles_at(t), params.harmonic_coeffs);
    }
  }

  if (params.pattern == BreathingPattern::apnea) {
    for (const auto& [start, end] : params.apnea_segments) {
      if (!(end > start)) throw InvalidArgument("apnea segment must have end > start");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      double gate = 1.0;
      for (const auto& [start, end] : params.apnea_segments) {
        gate *= 1.0 - tapered_box_outside(t, start, end, kApneaTaperS);
      }
      out.displacement_mm[i] *= gate;
      if (gate < 0.5) out.rate_bpm[i] = 0.0;
    }
  }
  return out;
}

SynthesizedSeries synth_heartbeat(const HeartbeatParams& params, std::size_t n, double fs) {
  require_timebase(n, fs);
  if (!(params.rate_bpm > 0.0)) throw InvalidArgument("heart rate must be positive");
  if (!(params.amplitude_mm >= 0.0)) throw InvalidArgument("heart amplitude must be non-negative");
  require_harmonics(params.harmonic_coeffs, "heartbeat");
  const RateProfile profile(params.rate_bpm, params.rate_schedule);

  SynthesizedSeries out;
  out.displacement_mm.resize(n);
  out.rate_bpm.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    out.rate_bpm[i] = profile.bpm_at(t);
    out.displacement_mm[i] =
        params.amplitude_mm * harmonic_waveform(kTwoPi * profile.cycles_at(t), params.harmonic_coeffs);
  }
  return out;
}

RbmSeries synth_rbm(const std::vector<RbmEvent>& events, std::size_t n, double fs,
                    std::uint64_t seed) {
  require_timebase(n, fs);
  const double span_s = static_cast<double>(n) / fs;
  RbmSeries out;
  out.displacement_mm.assign(n, 0.0);
  out.mask.assign(n, 0);
  auto rng = detail::make_rng(seed, detail::kStreamRbm);

  for (std::size_t e = 0; e < events.size(); ++e) {
    const RbmEvent& ev = events[e];
    const double start = ev.start_s;
    const double end = ev.start_s + ev.duration_s;
    if (!(ev.duration_s > 0.0)) throw InvalidArgument("RBM event duration must be positive");
    if (!(ev.amplitude_mm >= 0.0)) throw InvalidArgument("RBM amplitude must be non-negative");
    if (start < 0.0 || end > span_s + 1e-9) {
      throw InvalidArgument("RBM event " + std::to_string(e) + " lies outside the timebase");
    }

    std::vector<double> noise;
    std::size_t noise_begin = 0;
    if (ev.kind == RbmKind::band_limited_noise) {
      noise_begin = static_cast<std::size_t>(std::floor(start * fs));
      const std::size_t noise_end = std::min(n, static_cast<std::size_t>(std::ceil(end * fs)) + 1);
      noise = band_limited_noise(noise_end - noise_begin, fs, rng);
    }
    if (ev.kind == RbmKind::sinusoid && !(ev.freq_hz > 0.0)) {
      throw InvalidArgument("sinusoidal RBM needs a positive frequency");
    }

    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      double v = 0.0;
      switch (ev.kind) {
        case RbmKind::step:
          v = ev.amplitude_mm * (raised_cosine_edge((t - start) / kRbmEdgeS + 0.5) -
                                 raised_cosine_edge((t - end) / kRbmEdgeS + 0.5));
          break;
        case RbmKind::ramp:
          v = ev.amplitude_mm / ev.duration_s *
              (smoothed_ramp_integral(t - start, kRbmEdgeS) - smoothed_ramp_integral(t - end, kRbmEdgeS));
          break;
        case RbmKind::sinusoid:
          if (t >= start && t <= end) {
            v = ev.amplitude_mm * std::sin(kTwoPi * ev.freq_hz * (t - start)) *
                tapered_box_inside(t, start, end, kRbmEdgeS);
          }
          break;
        case RbmKind::band_limited_noise:
          if (t >= start && t <= end && i >= noise_begin && i - noise_begin < noise.size()) {
            v = ev.amplitude_mm * noise[i - noise_begin] * tapered_box_inside(t, start, end, kRbmEdgeS);
          }
          break;
      }
      out.displacement_mm[i] += v;
      if (t >= start - 0.5 * kRbmEdgeS && t <= end + 0.5 * kRbmEdgeS) out.mask[i] = 1;
    }
  }
  return out;
}

GroundTruth synth_ground_truth(const ScenarioConfig& config) {
  config.validate();
  const std::size_t n = config.num_frames();
  const double fs = config.frame_rate_hz;
  const SynthesizedSeries breathing = synth_breathing(config.breathing, n, fs, config.rng_seed);
  const SynthesizedSeries heart = synth_heartbeat(config.heartbeat, n, fs);
  const RbmSeries rbm = synth_rbm(config.rbm_events, n, fs, config.rng_seed);

  GroundTruth truth;
  truth.fs = fs;
  truth.breathing_mm = breathing.displacement_mm;
  truth.heart_mm = heart.displacement_mm;
  truth.rbm_mm = rbm.displacement_mm;
  truth.breathing_bpm = breathing.rate_bpm;
  truth.heart_bpm = heart.rate_bpm;
  truth.rbm_mask = rbm.mask;
  truth.total_mm.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    truth.total_mm[i] = truth.breathing_mm[i] + truth.heart_mm[i] + truth.rbm_mm[i];
  }
  if (config.heartbeat.amplitude_mm == 0.0) std::fill(truth.heart_bpm.begin(), truth.heart_bpm.end(), 0.0);
  if (config.breathing.amplitude_mm == 0.0) {
    std::fill(truth.breathing_bpm.begin(), truth.breathing_bpm.end(), 0.0);
  }
  return truth;
}

RadarCube modulate(const ScenarioConfig& config, GroundTruth& truth) {
  config.validate();
  const std::size_t frames = config.num_frames();
  if (truth.size() != frames) {
    throw InvalidArgument("ground truth has " + std::to_string(truth.size()) + " samples, expected " +
                          std::to_string(frames));
  }

  constexpr double amplitude = 1.0;
  auto phase_rng = detail::make_rng(config.rng_seed, detail::kStreamCarrierPhase);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  const double theta0 = angle(phase_rng);
  truth.initial_phase_rad = theta0;

  auto clutter_rng = detail::make_rng(config.rng_seed, detail::kStreamClutter);
  std::vector<Complex> clutter(config.num_range_bins);
  for (Complex& c : clutter) c = std::polar(config.clutter_amplitude * amplitude, angle(clutter_rng));

  RadarCube cube;
  cube.num_frames = frames;
  cube.num_bins = config.num_range_bins;
  cube.frame_rate_hz = config.frame_rate_hz;
  cube.wavelength_mm = config.carrier_wavelength_mm;
  cube.data.resize(frames * cube.num_bins);

  const double k = 4.0 * kPi / config.carrier_wavelength_mm;
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t b = 0; b < cube.num_bins; ++b) cube.at(f, b) = clutter[b];
    cube.at(f, config.subject_range_bin) += std::polar(amplitude, k * truth.total_mm[f] + theta0);
  }

  if (config.snr_db) {
    auto noise_rng = detail::make_rng(config.rng_seed, detail::kStreamNoise);
    const double sigma = amplitude * std::sqrt(std::pow(10.0, -*config.snr_db / 10.0) / 2.0);
    std::normal_distribution<double> normal(0.0, sigma);
    for (Complex& v : cube.data) {
      const double re = normal(noise_rng);
      const double im = normal(noise_rng);
      v += Complex(re, im);
    }
  }
  return cube;
}

Scenario run_scenario(const ScenarioConfig& config) {
  Scenario s;
  s.truth = synth_ground_truth(config);
  s.cube = modulate(config, s.truth);
  return s;
}

}  // namespace vitalradar
