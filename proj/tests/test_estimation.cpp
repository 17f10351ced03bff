// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "scenes.hpp"
#include "vitalradar/config.hpp"
#include "vitalradar/errors.hpp"
#include "vitalradar/estimation.hpp"
#include "vitalradar/pipeline.hpp"
#include "vitalradar/simulator.hpp"

using namespace vitalradar;
using testing::make_signal;

namespace {

constexpr double kFs = 50.0;
const FrequencyBand kBreath{0.1, 1.2};
const FrequencyBand kHeart{0.8, 3.5};

bool has_candidate(const std::vector<Candidate>& c, double bpm, int k) {
  return std::any_of(c.begin(), c.end(), [&](const Candidate& x) { return std::abs(x.bpm - bpm) < 1e-9 && x.k == k; });
}

DisplacementSignal breathing_heart(double duration_s, double breath_bpm, double heart_bpm, double snr_noise = 0.0,
                                   std::uint64_t seed = 1) {
  const auto n = static_cast<std::size_t>(duration_s * kFs);
  BreathingParams b;
  b.rate_bpm = breath_bpm;
  HeartbeatParams h;
  h.rate_bpm = heart_bpm;
  auto x = synth_breathing(b, n, kFs).displacement_mm;
  const auto y = synth_heartbeat(h, n, kFs).displacement_mm;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, snr_noise);
  for (std::size_t i = 0; i < n; ++i) x[i] += y[i] + (snr_noise > 0.0 ? noise(rng) : 0.0);
  return make_signal(std::move(x), kFs);
}

}  // namespace

TEST_SUITE("estimation") {

TEST_CASE("find_peaks: one tone, two tones") {
  const auto one = find_peaks(make_signal(testing::tone(600, kFs, 0.25), kFs), kBreath, 4);
  REQUIRE(one.size() == 1);
  CHECK(std::abs(one[0].freq_hz - 0.25) <= 0.01);

  auto x = testing::tone(600, kFs, 0.25);
  const auto y = testing::tone(600, kFs, 0.5, 1.0, 0.7);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
  auto two = find_peaks(make_signal(x, kFs), kBreath, 4);
  REQUIRE(two.size() == 2);
  std::sort(two.begin(), two.end(), [](const SpectralPeak& a, const SpectralPeak& b) { return a.freq_hz < b.freq_hz; });
  CHECK(std::abs(two[0].freq_hz - 0.25) <= 0.01);
  CHECK(std::abs(two[1].freq_hz - 0.5) <= 0.01);
}

TEST_CASE("find_peaks: white noise rarely clears the floor") {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> normal(0.0, 1.0);
  int false_peaks = 0;
  constexpr int kTrials = 200;
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<double> x(600);
    for (double& v : x) v = normal(rng);
    try {
      find_peaks(make_signal(x, kFs), kBreath, 4);
      ++false_peaks;
    } catch (const EmptyBand&) {
    }
  }
  CHECK(false_peaks < kTrials / 20);
}

TEST_CASE("estimate_breathing examples") {
  const RateEstimate e = estimate_breathing(breathing_heart(12.0, 15.0, 72.0), 12.0);
  CHECK(e.source == EstimateSource::fundamental);
  CHECK(std::abs(e.value_bpm - 15.0) <= 0.5);
  CHECK(e.confidence > 0.9);

  const RateEstimate slow = estimate_breathing(breathing_heart(12.0, 10.0, 72.0), 12.0);
  CHECK(std::abs(slow.value_bpm - 10.0) <= 1.0);

  std::mt19937_64 rng(52);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<double> still(600);
  for (double& v : still) v = noise(rng);
  const RateEstimate apnea = estimate_breathing(make_signal(still, kFs), 12.0);
  CHECK(apnea.coast());
  CHECK(apnea.confidence == 0.0);
}

TEST_CASE("snr_confidence anchors") {
  CHECK(snr_confidence(6.0) == doctest::Approx(0.5));
  CHECK(snr_confidence(20.0) >= 0.99);
  CHECK(snr_confidence(-10.0) < 0.05);
}

TEST_CASE("harmonic_candidates examples") {
  const std::vector<SpectralPeak> single{{2.4, 1.0, 20.0}};
  const auto c = harmonic_candidates(single, 0.0, kHeart);
  CHECK(has_candidate(c, 144.0, 1));
  CHECK(has_candidate(c, 72.0, 2));
  CHECK(has_candidate(c, 48.0, 3));

  // 72 bpm sits on the 4th breathing harmonic at 18 bpm; its 2nd harmonic does not.
  const std::vector<SpectralPeak> peaks{{1.2, 2.0, 25.0}, {2.4, 1.0, 18.0}};
  const auto g = harmonic_candidates(peaks, 0.3, kHeart);
  CHECK(has_candidate(g, 72.0, 2));
  for (const Candidate& x : g) CHECK(x.source_hz == doctest::Approx(2.4));

  const auto open = harmonic_candidates(peaks, 0.0, kHeart);
  CHECK(has_candidate(open, 72.0, 1));
  CHECK(has_candidate(open, 72.0, 2));

  const std::vector<SpectralPeak> only_harmonics{{0.9, 1.0, 20.0}, {1.2, 1.0, 20.0}};
  CHECK_THROWS_AS(harmonic_candidates(only_harmonics, 0.3, kHeart), NoCandidates);
}

TEST_CASE("kalman_step: gating and coasting") {
  TrackState s;
  s.rate_bpm = 70.0;
  s.variance = 4.0;
  const KalmanParams p;
  const KalmanStep step = kalman_step(s, {{70.5, 1, 20.0, 1.175}, {140.2, 1, 20.0, 2.337}}, 0.001, p);
  CHECK_FALSE(step.estimate.coast());
  CHECK(std::abs(step.state.rate_bpm - 70.5) < 0.5);
  CHECK(step.state.rate_bpm < 71.0);

  const KalmanStep coast = kalman_step(s, {}, 1.0, p);
  CHECK(coast.estimate.coast());
  CHECK(coast.state.rate_bpm == 70.0);
  CHECK(coast.state.variance == doctest::Approx(4.0 + p.q));
  CHECK(coast.state.miss_count == 1);

  CHECK_THROWS_AS(kalman_step(s, {}, 0.0, p), InvalidArgument);
}

TEST_CASE("kalman_step restarts after too many misses") {
  KalmanParams p;
  TrackState s;
  s.rate_bpm = 70.0;
  s.variance = 1.0;
  s.miss_count = p.max_misses;
  const KalmanStep step = kalman_step(s, {{120.0, 1, 20.0, 2.0}, {130.0, 1, 10.0, 2.2}}, 1.0, p);
  CHECK(step.state.rate_bpm == doctest::Approx(120.0));
  CHECK(step.state.variance == doctest::Approx(p.reinit_variance));
  CHECK(step.state.miss_count == 0);
}

TEST_CASE("property: gate soundness and variance behaviour") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> rate(50.0, 150.0), var(0.5, 50.0), off(-40.0, 40.0), snr(0.0, 30.0);
  std::uniform_int_distribution<int> count(0, 5);
  const KalmanParams p;
  for (int trial = 0; trial < 200; ++trial) {
    TrackState s;
    s.rate_bpm = rate(rng);
    s.variance = var(rng);
    std::vector<Candidate> cands;
    for (int c = count(rng); c > 0; --c) cands.push_back({s.rate_bpm + off(rng), 1, snr(rng), 1.0});
    const double dt = 1.0;
    const double predicted = s.variance + p.q * dt;
    const KalmanStep step = kalman_step(s, cands, dt, p);
    if (step.estimate.coast()) {
      if (step.state.miss_count > 0) CHECK(step.state.variance > s.variance);
    } else {
      CHECK(step.state.variance < predicted);
      // The update moved the state part of the way towards a gated candidate.
      bool gated = false;
      const double moved = step.state.rate_bpm - s.rate_bpm;
      for (const Candidate& c : cands) {
        const double innovation = c.bpm - s.rate_bpm;
        const double sigma = std::sqrt(predicted + measurement_variance(c.local_snr_db, p));
        const double gain = predicted / (predicted + measurement_variance(c.local_snr_db, p));
        gated |= std::abs(innovation) <= p.gate_sigma * sigma && std::abs(moved - gain * innovation) < 1e-9;
      }
      CHECK(gated);
    }
  }
}

TEST_CASE("property: peak frequencies and candidates ignore positive scaling") {
  std::mt19937_64 rng(54);
  std::uniform_real_distribution<double> br(10.0, 24.0), hr(55.0, 130.0), scale(1e-3, 1e3);
  for (int trial = 0; trial < 100; ++trial) {
    const DisplacementSignal d = breathing_heart(10.0, br(rng), hr(rng), 0.02, static_cast<std::uint64_t>(trial));
    DisplacementSignal e = d;
    const double k = scale(rng);
    for (double& v : e.values) v *= k;
    const auto pa = find_peaks(d, {0.8, 3.5}, 8);
    const auto pb = find_peaks(e, {0.8, 3.5}, 8);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i].freq_hz == doctest::Approx(pb[i].freq_hz).epsilon(1e-9));
      CHECK(pa[i].local_snr_db == doctest::Approx(pb[i].local_snr_db).epsilon(1e-9));
    }
  }
}

TEST_CASE("track: too short, clean scene, short movement") {
  CHECK_THROWS_AS(track(breathing_heart(5.0, 15.0, 72.0)), SignalTooShort);

  const TrackResult r = track(breathing_heart(60.0, 15.0, 72.0, 0.01));
  REQUIRE(r.breathing.size() == r.heart.size());
  int breath_ok = 0, heart_ok = 0;
  for (std::size_t i = 0; i < r.breathing.size(); ++i) {
    breath_ok += !r.breathing[i].coast() && std::abs(r.breathing[i].value_bpm - 15.0) <= 1.0;
    heart_ok += !r.heart[i].coast() && std::abs(r.heart[i].value_bpm - 72.0) <= 3.0;
  }
  CHECK(breath_ok >= 0.9 * static_cast<double>(r.breathing.size()));
  CHECK(heart_ok >= 0.9 * static_cast<double>(r.heart.size()));

  RunConfig cfg;
  cfg.scenario.rbm_events = {{30.0, 3.0, 15.0, RbmKind::step, 1.0}};
  const Scenario scene = run_scenario(cfg.scenario);
  const PipelineResult p = run_pipeline(scene.cube, cfg);
  for (const RateEstimate& e : p.tracks.heart) {
    if (!e.coast()) CHECK(std::abs(e.value_bpm - 72.0) <= 10.0);
  }
}

TEST_CASE("windows dominated by suspect samples coast") {
  DisplacementSignal d = breathing_heart(30.0, 15.0, 72.0);
  for (std::size_t i = 0; i < d.size(); ++i) d.quality[i] = SampleQuality::rbm_suspect;
  const TrackResult r = track(d);
  for (const RateEstimate& e : r.breathing) CHECK(e.coast());
  for (const RateEstimate& e : r.heart) CHECK(e.coast());
}

}  // TEST_SUITE
