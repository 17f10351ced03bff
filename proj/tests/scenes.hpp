// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Scenario builders and reference measurements shared by the unit tests
// and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "vitalradar/config.hpp"
#include "vitalradar/rbm_filter.hpp"
#include "vitalradar/simulator.hpp"

namespace vitalradar::testing {

inline DisplacementSignal make_signal(std::vector<double> values, double fs) {
  DisplacementSignal d;
  d.fs = fs;
  d.quality.assign(values.size(), SampleQuality::valid);
  d.values = std::move(values);
  return d;
}

inline std::vector<double> tone(std::size_t n, double fs, double f_hz, double amplitude = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amplitude * std::sin(2.0 * 3.14159265358979323846 * f_hz * static_cast<double>(i) / fs + phase);
  }
  return x;
}

inline double rms(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

inline ScenarioConfig clean_scene(double duration_s = 60.0, double fs = 50.0) {
  ScenarioConfig c;
  c.duration_s = duration_s;
  c.frame_rate_hz = fs;
  c.snr_db.reset();
  return c;
}

// Wrapped -> true phase offset, recovered up to a constant.
inline std::vector<double> true_phase(const GroundTruth& truth, double wavelength_mm) {
  std::vector<double> p(truth.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = 4.0 * 3.14159265358979323846 * truth.total_mm[i] / wavelength_mm + truth.initial_phase_rad;
  }
  return p;
}

// RMS of (a - b) after removing the mean difference.
inline double rms_diff_centered(const std::vector<double>& a, const std::vector<double>& b) {
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(a.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(a[i] - b[i] - mean, 2);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

inline double max_abs_diff_centered(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0.0, mb = 0.0;
  for (double v : a) ma += v;
  for (double v : b) mb += v;
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs((a[i] - ma) - (b[i] - mb)));
  return worst;
}

// Six non-overlapping movement events of 1-3 s and 10-30 mm, at least
// `spacing_s` apart and clear of the first and last `margin_s`.
inline std::vector<RbmEvent> random_events(std::mt19937_64& rng, double duration_s, std::size_t count,
                                           const std::vector<RbmKind>& kinds, double spacing_s = 8.0,
                                           double margin_s = 8.0) {
  std::uniform_real_distribution<double> dur(1.0, 3.0), amp(10.0, 30.0), freq(0.5, 1.5);
  std::uniform_int_distribution<std::size_t> pick(0, kinds.size() - 1);
  std::vector<RbmEvent> events;
  while (events.size() < count) {
    events.clear();
    for (std::size_t tries = 0; tries < 1000 && events.size() < count; ++tries) {
      RbmEvent e;
      e.duration_s = dur(rng);
      std::uniform_real_distribution<double> start(margin_s, duration_s - margin_s - e.duration_s);
      e.start_s = start(rng);
      e.amplitude_mm = amp(rng);
      e.kind = kinds[pick(rng)];
      e.freq_hz = freq(rng);
      bool clear = true;
      for (const RbmEvent& o : events) {
        if (e.start_s < o.start_s + o.duration_s + spacing_s && o.start_s < e.start_s + e.duration_s + spacing_s) {
          clear = false;
        }
      }
      if (clear) events.push_back(e);
    }
  }
  std::sort(events.begin(), events.end(), [](const RbmEvent& a, const RbmEvent& b) { return a.start_s < b.start_s; });
  return events;
}

}  // namespace vitalradar::testing
