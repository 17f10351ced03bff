// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "vitalradar/demodulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "vitalradar/errors.hpp"

namespace vitalradar {
namespace {

// Largest per-sample phase step treated as slow motion when re-seeding the
// recursion after a bound violation.
constexpr double kCalmStepRad = 0.5 * kPi;
// Duration of such slow motion after which a disagreeing recursion is reset.
constexpr double kReseedS = 0.5;

// Number of 2 pi turns to add so that x + 2 pi k lands in [-pi, pi];
// exact half turns are left alone.
std::int64_t turns_to_wrap(double x) {
  const double q = -x / kTwoPi;
  double k = std::round(q);
  if (std::abs(q - std::trunc(q)) == 0.5) k = std::trunc(q);
  return static_cast<std::int64_t>(k);
}

void require_wrapped(const PhaseSeries& p) {
  if (!p.wrapped) throw InvalidArgument("expected a wrapped phase series");
}

std::vector<std::int64_t> binomial_signed(int order) {
  // c_j = (-1)^j C(N, j)
  std::vector<std::int64_t> c(static_cast<std::size_t>(order) + 1);
  c[0] = 1;
  for (int j = 1; j <= order; ++j) c[j] = -c[j - 1] * (order - j + 1) / j;
  return c;
}

}  // namespace

PhaseSeries arctan_demod(const SlowTimeSignal& signal) {
  PhaseSeries p;
  p.fs = signal.fs;
  p.wrapped = true;
  p.values.resize(signal.samples.size());
  p.suspect.assign(signal.samples.size(), 0);
  for (std::size_t i = 0; i < signal.samples.size(); ++i) {
    const Complex s = signal.samples[i];
    if (s.real() == 0.0 && s.imag() == 0.0) {
      p.values[i] = 0.0;
      p.suspect[i] = 1;
      continue;
    }
    double v = std::atan2(s.imag(), s.real());
    if (v <= -kPi) v = kPi;
    p.values[i] = v;
  }
  return p;
}

PhaseSeries unwrap_conventional(const PhaseSeries& wrapped) {
  require_wrapped(wrapped);
  PhaseSeries out = wrapped;
  out.wrapped = false;
  if (out.suspect.size() != out.values.size()) out.suspect.assign(out.values.size(), 0);
  const auto& w = wrapped.values;
  std::int64_t turns = 0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    turns += turns_to_wrap(w[i] - w[i - 1]);
    out.values[i] = w[i] + kTwoPi * static_cast<double>(turns);
  }
  return out;
}

RobustUnwrap unwrap_robust(const PhaseSeries& wrapped, const UnwrapOptions& options) {
  require_wrapped(wrapped);
  if (options.order < 1 || options.order > 3) throw InvalidArgument("unwrap order must be 1, 2 or 3");
  if (!(options.bound_rad > 0.0) || options.bound_rad > kPi) {
    throw InvalidArgument("difference bound must lie in (0, pi]");
  }

  const auto& w = wrapped.values;
  const std::size_t n = w.size();
  const std::size_t order = static_cast<std::size_t>(options.order);
  const std::vector<std::int64_t> coeff = binomial_signed(options.order);

  RobustUnwrap result;
  result.phase = wrapped;
  result.phase.wrapped = false;
  if (result.phase.suspect.size() != n) result.phase.suspect.assign(n, 0);
  if (n == 0) return result;

  // Residue of the N-th difference and its wrapped value, per sample.
  std::vector<std::int64_t> residue(n, 0);
  std::vector<double> wrapped_diff(n, 0.0);
  for (std::size_t i = order; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j <= order; ++j) d += static_cast<double>(coeff[j]) * w[i - j];
    residue[i] = turns_to_wrap(d);
    wrapped_diff[i] = d + kTwoPi * static_cast<double>(residue[i]);
  }

  std::vector<std::uint8_t> violated(n, 0);
  for (std::size_t i = order; i < n; ++i) {
    double magnitude = std::abs(wrapped_diff[i]);
    if (options.median_prefilter && i > order && i + 1 < n) {
      double a = wrapped_diff[i - 1], b = wrapped_diff[i], c = wrapped_diff[i + 1];
      magnitude = std::abs(std::max(std::min(a, b), std::min(std::max(a, b), c)));
    }
    result.report.max_residual = std::max(result.report.max_residual, std::abs(wrapped_diff[i]));
    if (magnitude > options.bound_rad) {
      violated[i] = 1;
      result.report.violations.push_back(i);
      for (std::size_t j = i - order; j <= i; ++j) result.phase.suspect[j] = 1;
    }
  }
  result.report.valid = result.report.violations.empty();
  if (options.strict && !result.report.valid) {
    const std::size_t first = result.report.violations.front();
    throw BoundViolation(first, std::abs(wrapped_diff[first]));
  }

  const std::size_t anchor =
      std::max(order, static_cast<std::size_t>(std::llround(options.anchor_s * wrapped.fs)));
  // After a violation the recursion's history is unreliable, so unwrap item
  // by item until the phase has moved slowly for order + 1 samples; item-by-
  // item unwrapping is exact there, and the recursion restarts from it.
  // A restart during fast motion, or a difference that aliases past pi
  // without tripping the bound, leaves a 2 pi per-sample slope error. It
  // shows as the recursion stepping by a turn or more while the wrapped
  // phase barely moves; once that has lasted kReseedS the stretch is redone
  // item by item. The price is that a genuine step within pi/2 of a whole
  // turn per sample, sustained that long, is read as a slip.
  std::vector<std::int64_t> turns(n, 0);
  auto item_step = [&](std::size_t i) { return turns_to_wrap(w[i] - w[i - 1]); };
  auto slow = [&](std::size_t i) {
    return std::abs(w[i] - w[i - 1] + kTwoPi * static_cast<double>(item_step(i))) < kCalmStepRad;
  };
  const std::size_t reseed_after =
      std::max(order + 1, static_cast<std::size_t>(std::llround(kReseedS * wrapped.fs)));
  bool fallback = false;
  std::size_t calm = 0, slipping = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (violated[i]) {
      fallback = true;
      calm = 0;
    } else if (fallback) {
      calm = slow(i) ? calm + 1 : 0;
      if (calm > order) fallback = false;
    }
    if (i < anchor || fallback || calm > 0) {
      turns[i] = turns[i - 1] + item_step(i);
      if (!fallback) calm = 0;
      slipping = 0;
      continue;
    }
    std::int64_t acc = residue[i];
    for (std::size_t j = 1; j <= order; ++j) acc -= coeff[j] * turns[i - j];
    turns[i] = acc;
    slipping = slow(i) && turns[i] - turns[i - 1] != item_step(i) ? slipping + 1 : 0;
    if (slipping >= reseed_after) {
      for (std::size_t j = i + 1 - slipping; j <= i; ++j) turns[j] = turns[j - 1] + item_step(j);
      slipping = 0;
    }
  }
  for (std::size_t i = 1; i < n; ++i) result.phase.values[i] = w[i] + kTwoPi * static_cast<double>(turns[i]);
  return result;
}

DisplacementSignal phase_to_displacement(const PhaseSeries& unwrapped, double wavelength_mm) {
  if (unwrapped.wrapped) throw InvalidArgument("expected an unwrapped phase series");
  if (!(wavelength_mm > 0.0)) throw InvalidArgument("wavelength must be positive");
  DisplacementSignal d;
  d.fs = unwrapped.fs;
  const std::size_t n = unwrapped.values.size();
  d.values.resize(n);
  d.quality.assign(n, SampleQuality::valid);
  const double k = wavelength_mm / (4.0 * kPi);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d.values[i] = unwrapped.values[i] * k;
    mean += d.values[i];
  }
  if (n > 0) mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.values[i] -= mean;
    if (i < unwrapped.suspect.size() && unwrapped.suspect[i]) d.quality[i] = SampleQuality::rbm_suspect;
  }
  return d;
}

}  // namespace vitalradar
