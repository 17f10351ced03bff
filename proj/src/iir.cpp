// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "vitalradar/iir.hpp"

#include <algorithm>
#include <cmath>

#include "vitalradar/errors.hpp"
#include "vitalradar/types.hpp"

namespace vitalradar {
namespace {

using cd = std::complex<double>;

struct SectionState {
  double z1 = 0.0, z2 = 0.0;
};

// Transposed direct form II.
void run_cascade(const std::vector<Biquad>& sections, std::vector<SectionState>& state,
                 std::vector<double>& x) {
  for (std::size_t s = 0; s < sections.size(); ++s) {
    const Biquad& q = sections[s];
    double z1 = state[s].z1, z2 = state[s].z2;
    for (double& v : x) {
      const double in = v;
      const double out = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * out + z2;
      z2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
}

// Steady-state of each section for a unit step at the cascade input.
std::vector<SectionState> step_state(const std::vector<Biquad>& sections) {
  std::vector<SectionState> zi(sections.size());
  double gain = 1.0;
  for (std::size_t s = 0; s < sections.size(); ++s) {
    const Biquad& q = sections[s];
    const double h = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    zi[s].z2 = gain * (q.b2 - q.a2 * h);
    zi[s].z1 = gain * (q.b1 - q.a1 * h) + zi[s].z2;
    gain *= h;
  }
  return zi;
}

}  // namespace

BandpassDesign design_butterworth_bandpass(double f_lo, double f_hi, double fs, double pass_loss_db,
                                           double stop_atten_db, int max_order) {
  if (!(fs > 0.0) || !(f_lo > 0.0) || !(f_hi > f_lo) || !(f_hi < 0.5 * fs)) {
    throw InvalidArgument("band-pass edges must satisfy 0 < f_lo < f_hi < fs/2");
  }
  if (!(pass_loss_db > 0.0) || !(stop_atten_db > pass_loss_db)) {
    throw InvalidArgument("invalid band-pass tolerances");
  }
  auto prewarp = [fs](double f) { return 2.0 * fs * std::tan(kPi * f / fs); };
  const double wp1 = prewarp(f_lo);
  const double wp2 = prewarp(f_hi);
  const double w0sq = wp1 * wp2;
  const double bw = wp2 - wp1;
  auto prototype_freq = [&](double w) { return std::abs((w * w - w0sq) / (w * bw)); };

  double stop_ratio = prototype_freq(prewarp(0.5 * f_lo));
  const double f_stop_hi = 1.5 * f_hi;
  if (f_stop_hi < 0.5 * fs) stop_ratio = std::min(stop_ratio, prototype_freq(prewarp(f_stop_hi)));

  const double gp = std::pow(10.0, 0.1 * pass_loss_db) - 1.0;
  const double gs = std::pow(10.0, 0.1 * stop_atten_db) - 1.0;
  int order = static_cast<int>(std::ceil(std::log10(gs / gp) / (2.0 * std::log10(stop_ratio))));
  order = std::max(order, 1);
  if (order > max_order) throw InvalidArgument("band-pass transition bands too narrow");

  // Prototype cutoff placed so the loss at the passband edges is exactly gp.
  const double wc = std::pow(gp, -1.0 / (2.0 * order));

  std::vector<cd> poles;
  for (int k = 0; k < order; ++k) {
    const double theta = kPi * (2.0 * k + 1.0 + order) / (2.0 * order);
    const cd p = wc * cd(std::cos(theta), std::sin(theta));
    // s^2 - p bw s + w0^2 = 0
    const cd b = -p * bw;
    const cd disc = std::sqrt(b * b - 4.0 * w0sq);
    for (const cd s : {(-b + disc) / 2.0, (-b - disc) / 2.0}) {
      poles.push_back((2.0 * fs + s) / (2.0 * fs - s));
    }
  }

  // Pair conjugates; real poles pair with each other.
  std::vector<cd> upper;
  std::vector<double> real_poles;
  for (const cd& z : poles) {
    if (std::abs(z.imag()) < 1e-12) {
      real_poles.push_back(z.real());
    } else if (z.imag() > 0.0) {
      upper.push_back(z);
    }
  }
  BandpassDesign design;
  design.prototype_order = order;
  for (const cd& z : upper) {
    Biquad q;
    q.b0 = 1.0;
    q.b1 = 0.0;
    q.b2 = -1.0;
    q.a1 = -2.0 * z.real();
    q.a2 = std::norm(z);
    design.sections.push_back(q);
  }
  std::sort(real_poles.begin(), real_poles.end());
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    Biquad q;
    q.b2 = -1.0;
    q.a1 = -(real_poles[i] + real_poles[i + 1]);
    q.a2 = real_poles[i] * real_poles[i + 1];
    design.sections.push_back(q);
  }
  if (design.sections.size() != static_cast<std::size_t>(order)) {
    throw Error("band-pass pole pairing failed");
  }

  // Unit gain at the geometric centre of the passband.
  const double fc = fs / kPi * std::atan(std::sqrt(w0sq) / (2.0 * fs));
  const double g = std::abs(frequency_response(design, fc, fs));
  const double per_section = std::pow(g, -1.0 / static_cast<double>(order));
  for (Biquad& q : design.sections) {
    q.b0 *= per_section;
    q.b1 *= per_section;
    q.b2 *= per_section;
  }
  return design;
}

std::complex<double> frequency_response(const BandpassDesign& design, double f, double fs) {
  const cd z1 = std::polar(1.0, -kTwoPi * f / fs);
  const cd z2 = z1 * z1;
  cd h{1.0, 0.0};
  for (const Biquad& q : design.sections) {
    h *= (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
  }
  return h;
}

std::vector<double> sosfiltfilt(const BandpassDesign& design, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t ntaps = 2 * design.sections.size() + 1;
  std::size_t pad = 3 * ntaps;
  if (pad >= n) pad = n - 1;

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const std::vector<SectionState> zi = step_state(design.sections);
  auto primed = [&](double x0) {
    std::vector<SectionState> s = zi;
    for (SectionState& st : s) {
      st.z1 *= x0;
      st.z2 *= x0;
    }
    return s;
  };

  auto state = primed(ext.front());
  run_cascade(design.sections, state, ext);
  std::reverse(ext.begin(), ext.end());
  state = primed(ext.front());
  run_cascade(design.sections, state, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace vitalradar
