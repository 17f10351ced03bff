// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "vitalradar/rbm_filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "vitalradar/cube_io.hpp"
#include "vitalradar/errors.hpp"
#include "vitalradar/fft.hpp"
#include "vitalradar/iir.hpp"
#include "vitalradar/kernels.hpp"

namespace vitalradar {
namespace {

// The record counts as periodic when the typical prediction error is below
// this share of the typical speed.
constexpr double kPeriodicGain = 0.5;
// Lags scoring within this factor of the best count as candidate periods.
constexpr double kLagSlack = 1.5;
// Periods on either side used to predict a sample; two keep a sample between
// two movements one period apart from each looking moving.
constexpr std::size_t kPredictionPeriods = 2;
// Moving-sample threshold never drops below this share of the median speed,
// which matters only for nearly noiseless records.
constexpr double kResidualFloor = 0.2;
// Gap model: at most kMaxLines sinusoids, each explaining at least
// kMinLineShare of the context energy.
constexpr std::size_t kMaxLines = 8;
constexpr double kMinLineShare = 0.005;

std::size_t samples_for(double seconds, double fs) {
  return static_cast<std::size_t>(std::llround(seconds * fs));
}

// First sample of the hop cell of frame m (the hop-long stretch around the
// window centre). Cells of consecutive frames tile the time axis.
std::ptrdiff_t cell_begin(const Spectrogram& s, std::size_t m) {
  return s.frame_start(m) + static_cast<std::ptrdiff_t>((s.window_len - s.hop) / 2);
}

template <typename F>
void for_each_cell_sample(const Spectrogram& s, std::size_t m, F&& f) {
  const std::ptrdiff_t b = std::max<std::ptrdiff_t>(cell_begin(s, m), 0);
  const std::ptrdiff_t e = std::min<std::ptrdiff_t>(cell_begin(s, m) + static_cast<std::ptrdiff_t>(s.hop),
                                                    static_cast<std::ptrdiff_t>(s.signal_len));
  for (std::ptrdiff_t i = b; i < e; ++i) f(static_cast<std::size_t>(i));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

bool in_any_band(double f, double df, const FrequencyBand& a, const FrequencyBand& b) {
  return bin_in_band(f, df, a) || bin_in_band(f, df, b);
}

// Gaussian smoothing with its -3 dB point at f_max, then central-difference
// speed in units per second. `edge` receives the number of samples at each
// end where the kernel runs off the record.
std::vector<double> smoothed_velocity(const std::vector<double>& x, double fs, double f_max, std::size_t& edge) {
  const std::size_t n = x.size();
  std::vector<double> v(n, 0.0);
  edge = 0;
  if (n < 3) return v;
  const double sigma = fs * std::sqrt(std::log(2.0)) / (kTwoPi * f_max / std::sqrt(2.0));
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double ksum = 0.0;
  for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
    const double w = std::exp(-0.5 * static_cast<double>(j * j) / (sigma * sigma));
    kernel[static_cast<std::size_t>(j + radius)] = w;
    ksum += w;
  }
  const auto len = static_cast<std::ptrdiff_t>(n);
  std::vector<double> y(n, 0.0);
  for (std::ptrdiff_t i = 0; i < len; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t j = -radius; j <= radius; ++j) {
      const std::ptrdiff_t k = std::clamp<std::ptrdiff_t>(i + j, 0, len - 1);
      acc += kernel[static_cast<std::size_t>(j + radius)] * x[static_cast<std::size_t>(k)];
    }
    y[static_cast<std::size_t>(i)] = acc / ksum;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) v[i] = 0.5 * fs * (y[i + 1] - y[i - 1]);
  edge = std::min(static_cast<std::size_t>(radius) + 1, (n - 1) / 2);
  return v;
}

// Median absolute change of v over one lag.
double lag_score(const std::vector<double>& v, std::size_t lag) {
  std::vector<double> d;
  d.reserve(v.size() - lag);
  for (std::size_t i = lag; i < v.size(); ++i) d.push_back(std::abs(v[i] - v[i - lag]));
  return median_of(d);
}

// Breathing repeats itself, so the speed one or two periods earlier or later
// predicts the current speed; movement does not. Returns per sample the
// smallest prediction error, or plain speed when no lag in [lag_lo, lag_hi]
// predicts markedly better than zero does.
std::vector<double> periodic_residual(const std::vector<double>& v, std::size_t lag_lo, std::size_t lag_hi) {
  const std::size_t n = v.size();
  std::vector<double> speed(n);
  for (std::size_t i = 0; i < n; ++i) speed[i] = std::abs(v[i]);
  lag_lo = std::max<std::size_t>(lag_lo, 1);
  lag_hi = std::min(lag_hi, n / 2);
  if (lag_lo > lag_hi) return speed;

  std::vector<double> scores;
  for (std::size_t lag = lag_lo; lag <= lag_hi; ++lag) scores.push_back(lag_score(v, lag));
  const double best = *std::min_element(scores.begin(), scores.end());
  if (!(best < kPeriodicGain * median_of(speed))) return speed;

  // Multiples of the period score about as well as the period itself, so take
  // the shortest lag close to the best score and settle on the dip around it.
  std::size_t first = 0;
  while (scores[first] > kLagSlack * best) ++first;
  const std::size_t last = std::min(scores.size() - 1, first + first / 4 + lag_lo / 4);
  const std::size_t pick =
      static_cast<std::size_t>(std::min_element(scores.begin() + first, scores.begin() + last + 1) - scores.begin());
  const std::size_t lag = lag_lo + pick;

  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    double e = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= kPredictionPeriods; ++k) {
      if (i >= k * lag) e = std::min(e, std::abs(v[i] - v[i - k * lag]));
      if (i + k * lag < n) e = std::min(e, std::abs(v[i] - v[i + k * lag]));
    }
    u[i] = e;
  }
  return u;
}

// Weighted mean of x over [b, e) skipping samples inside events, with a
// raised-cosine taper across the stretch.
std::optional<double> clean_level(const std::vector<double>& x, std::ptrdiff_t b, std::ptrdiff_t e,
                                  const std::vector<std::uint8_t>& in_event) {
  b = std::max<std::ptrdiff_t>(b, 0);
  e = std::min<std::ptrdiff_t>(e, static_cast<std::ptrdiff_t>(x.size()));
  if (e <= b) return std::nullopt;
  double acc = 0.0, wsum = 0.0;
  const double len = static_cast<double>(e - b);
  for (std::ptrdiff_t i = b; i < e; ++i) {
    if (in_event[static_cast<std::size_t>(i)]) continue;
    const double w = std::sin(kPi * (static_cast<double>(i - b) + 0.5) / len);
    acc += w * w * x[static_cast<std::size_t>(i)];
    wsum += w * w;
  }
  if (!(wsum > 0.0)) return std::nullopt;
  return acc / wsum;
}

// Subtracts, for every event, the level change between the clean stretches
// on either side, spread linearly across the event. Leaves the signal
// before the first event untouched.
void remove_baseline_jumps(std::vector<double>& x, const std::vector<SampleSpan>& events, std::size_t span) {
  std::vector<std::uint8_t> in_event(x.size(), 0);
  for (const SampleSpan& e : events) {
    std::fill(in_event.begin() + static_cast<std::ptrdiff_t>(e.begin), in_event.begin() + static_cast<std::ptrdiff_t>(e.end), 1);
  }
  const auto sp = static_cast<std::ptrdiff_t>(span);
  std::vector<double> jumps;
  for (const SampleSpan& e : events) {
    const auto b = static_cast<std::ptrdiff_t>(e.begin);
    const auto en = static_cast<std::ptrdiff_t>(e.end);
    const auto before = clean_level(x, b - sp, b, in_event);
    const auto after = clean_level(x, en, en + sp, in_event);
    jumps.push_back(before && after ? *after - *before : 0.0);
  }
  double offset = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    while (next < events.size() && i >= events[next].end) offset += jumps[next++];
    double partial = 0.0;
    if (next < events.size() && i >= events[next].begin) {
      const SampleSpan& e = events[next];
      partial = jumps[next] * static_cast<double>(i - e.begin + 1) / static_cast<double>(e.end - e.begin + 1);
    }
    x[i] -= offset + partial;
  }
}


// Sum of sinusoids plus a straight line, fitted by least squares to
// irregularly spaced samples.
struct SineModel {
  double t_ref = 0.0;
  std::vector<double> omega;  // rad/s
  std::vector<double> coef;   // offset, slope, then cos/sin pairs

  double operator()(double t) const {
    const double u = t - t_ref;
    double y = coef[0] + coef[1] * u;
    for (std::size_t k = 0; k < omega.size(); ++k) {
      y += coef[2 + 2 * k] * std::cos(omega[k] * u) + coef[3 + 2 * k] * std::sin(omega[k] * u);
    }
    return y;
  }
};

// Solves the symmetric positive system in place (Cholesky); false when it
// is singular.
bool solve_spd(std::vector<double>& a, std::vector<double>& b, std::size_t p) {
  for (std::size_t j = 0; j < p; ++j) {
    double d = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a[j * p + j] = d;
    for (std::size_t i = j + 1; i < p; ++i) {
      double v = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = v / d;
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i * p + k] * b[k];
    b[i] /= a[i * p + i];
  }
  for (std::size_t i = p; i-- > 0;) {
    for (std::size_t k = i + 1; k < p; ++k) b[i] -= a[k * p + i] * b[k];
    b[i] /= a[i * p + i];
  }
  return true;
}

// Fits coefficients for fixed frequencies; returns the residual energy.
double fit_coefficients(SineModel& m, const std::vector<double>& t, const std::vector<double>& x) {
  const std::size_t p = 2 + 2 * m.omega.size();
  std::vector<double> gram(p * p, 0.0), rhs(p, 0.0), row(p);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double u = t[i] - m.t_ref;
    row[0] = 1.0;
    row[1] = u;
    for (std::size_t k = 0; k < m.omega.size(); ++k) {
      row[2 + 2 * k] = std::cos(m.omega[k] * u);
      row[3 + 2 * k] = std::sin(m.omega[k] * u);
    }
    for (std::size_t r = 0; r < p; ++r) {
      rhs[r] += row[r] * x[i];
      for (std::size_t c = 0; c <= r; ++c) gram[r * p + c] += row[r] * row[c];
    }
  }
  double trace = 0.0;
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = r + 1; c < p; ++c) gram[r * p + c] = gram[c * p + r];
    trace += gram[r * p + r];
  }
  for (std::size_t r = 0; r < p; ++r) gram[r * p + r] += 1e-12 * trace;
  if (!solve_spd(gram, rhs, p)) return std::numeric_limits<double>::infinity();
  m.coef = std::move(rhs);
  double rss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) rss += std::pow(x[i] - m(t[i]), 2);
  return rss;
}

// Moves one frequency within +-half_width to the least-squares optimum.
double refine_frequency(SineModel& m, std::size_t k, double half_width, const std::vector<double>& t,
                        const std::vector<double>& x) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = m.omega[k] - half_width, hi = m.omega[k] + half_width;
  auto rss_at = [&](double w) {
    SineModel trial = m;
    trial.omega[k] = w;
    return fit_coefficients(trial, t, x);
  };
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = rss_at(x1), f2 = rss_at(x2);
  for (int it = 0; it < 24; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = rss_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = rss_at(x2);
    }
  }
  m.omega[k] = 0.5 * (lo + hi);
  return fit_coefficients(m, t, x);
}

// Greedy sinusoid search over the bands: the strongest periodogram line of
// the residual is added and its frequency refined, until a new line
// explains less than kMinLineShare of the energy left by the straight line.
SineModel fit_sines(const std::vector<double>& t, const std::vector<double>& x, double t_ref,
                    const FrequencyBand& breath, const FrequencyBand& heart) {
  SineModel m;
  m.t_ref = t_ref;
  const double base = fit_coefficients(m, t, x);
  if (t.size() < 8 || !std::isfinite(base)) return m;
  const double span = t.back() - t.front();
  const double step_hz = 1.0 / (4.0 * span);
  double rss = base;
  std::vector<double> residual(x.size());
  for (std::size_t c = 0; c < kMaxLines && 2 * (m.omega.size() + 2) < t.size(); ++c) {
    for (std::size_t i = 0; i < x.size(); ++i) residual[i] = x[i] - m(t[i]);
    double best_power = -1.0, best_hz = 0.0;
    for (const FrequencyBand& band : {breath, heart}) {
      for (double f = std::max(band.lo_hz, step_hz); f <= band.hi_hz; f += step_hz) {
        const double w = kTwoPi * f;
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
          re += residual[i] * std::cos(w * (t[i] - t_ref));
          im += residual[i] * std::sin(w * (t[i] - t_ref));
        }
        if (re * re + im * im > best_power) {
          best_power = re * re + im * im;
          best_hz = f;
        }
      }
    }
    SineModel next = m;
    next.omega.push_back(kTwoPi * best_hz);
    const double next_rss = refine_frequency(next, next.omega.size() - 1, kTwoPi * step_hz, t, x);
    if (!(rss - next_rss > kMinLineShare * base)) break;
    m = std::move(next);
    rss = next_rss;
  }
  for (std::size_t k = 0; k < m.omega.size(); ++k) rss = refine_frequency(m, k, kPi * step_hz, t, x);
  return m;
}
}  // namespace

std::vector<double> make_window(WindowKind kind, std::size_t length) {
  std::vector<double> w(length);
  const double a0 = kind == WindowKind::hann ? 0.5 : 0.54;
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = a0 - (1.0 - a0) * std::cos(kTwoPi * static_cast<double>(n) / static_cast<double>(length));
  }
  return w;
}

void check_cola(WindowKind kind, std::size_t window_len, std::size_t hop) {
  if (window_len == 0 || hop == 0 || hop > window_len) {
    throw NonColaWindow("hop must lie in [1, window_len]");
  }
  const std::vector<double> w = make_window(kind, window_len);
  double lo = INFINITY, hi = 0.0;
  for (std::size_t n = 0; n < hop; ++n) {
    double acc = 0.0;
    for (std::size_t i = n; i < window_len; i += hop) acc += w[i] * w[i];
    lo = std::min(lo, acc);
    hi = std::max(hi, acc);
  }
  if (!(lo > 0.0) || (hi - lo) > 1e-10 * hi) {
    throw NonColaWindow("window does not overlap-add to a constant at hop " + std::to_string(hop));
  }
}

Spectrogram stft(const DisplacementSignal& d, std::size_t window_len, std::size_t hop, WindowKind kind) {
  check_cola(kind, window_len, hop);
  if (window_len > d.size()) throw InvalidArgument("window longer than the signal");
  Spectrogram s;
  s.window_len = window_len;
  s.hop = hop;
  s.fs = d.fs;
  s.window_kind = kind;
  s.signal_len = d.size();
  s.pad = window_len - hop;
  s.t0_s = d.t0_s;
  s.num_frames = (s.signal_len - 1 + s.pad) / hop + 1;
  s.num_bins = window_len / 2 + 1;
  s.values.assign(s.num_frames * s.num_bins, Complex{});

  const std::vector<double> w = make_window(kind, window_len);
  const RealFft fft(window_len);
  std::vector<double> frame(window_len);
  const auto len = static_cast<std::ptrdiff_t>(s.signal_len);
  for (std::size_t m = 0; m < s.num_frames; ++m) {
    const std::ptrdiff_t start = s.frame_start(m);
    for (std::size_t n = 0; n < window_len; ++n) {
      const std::ptrdiff_t i = start + static_cast<std::ptrdiff_t>(n);
      frame[n] = (i >= 0 && i < len) ? d.values[static_cast<std::size_t>(i)] : 0.0;
    }
    kernels::multiply(frame, w, frame);
    fft.forward(frame, {s.values.data() + m * s.num_bins, s.num_bins});
  }
  return s;
}

DisplacementSignal istft(const Spectrogram& s) {
  check_cola(s.window_kind, s.window_len, s.hop);
  if (s.values.size() != s.num_frames * s.num_bins || s.num_bins != s.window_len / 2 + 1) {
    throw InvalidArgument("spectrogram shape mismatch");
  }
  const std::vector<double> w = make_window(s.window_kind, s.window_len);
  const RealFft fft(s.window_len);
  std::vector<double> acc(s.signal_len, 0.0), norm(s.signal_len, 0.0), frame(s.window_len);
  const auto len = static_cast<std::ptrdiff_t>(s.signal_len);
  for (std::size_t m = 0; m < s.num_frames; ++m) {
    fft.inverse({s.values.data() + m * s.num_bins, s.num_bins}, frame);
    const std::ptrdiff_t start = s.frame_start(m);
    for (std::size_t n = 0; n < s.window_len; ++n) {
      const std::ptrdiff_t i = start + static_cast<std::ptrdiff_t>(n);
      if (i < 0 || i >= len) continue;
      acc[static_cast<std::size_t>(i)] += w[n] * frame[n];
      norm[static_cast<std::size_t>(i)] += w[n] * w[n];
    }
  }
  DisplacementSignal out;
  out.fs = s.fs;
  out.t0_s = s.t0_s;
  out.values.resize(s.signal_len);
  for (std::size_t i = 0; i < s.signal_len; ++i) out.values[i] = norm[i] > 0.0 ? acc[i] / norm[i] : 0.0;
  out.quality.assign(s.signal_len, SampleQuality::valid);
  return out;
}

bool bin_in_band(double f_hz, double df_hz, const FrequencyBand& band) {
  return f_hz + 0.5 * df_hz >= band.lo_hz && f_hz - 0.5 * df_hz <= band.hi_hz;
}

std::size_t QualityMask::num_corrupted() const {
  return static_cast<std::size_t>(std::count(corrupted.begin(), corrupted.end(), 1));
}

QualityMask detect_rbm_frames(const Spectrogram& s, const FrequencyBand& breath_band,
                              const FrequencyBand& heart_band, const RbmFilterParams& params,
                              std::span<const SampleQuality> prior) {
  const double nyquist = 0.5 * s.fs;
  if (breath_band.hi_hz > nyquist || heart_band.hi_hz > nyquist || breath_band.lo_hz < 0.0 ||
      heart_band.lo_hz < 0.0) {
    throw InvalidArgument("physiological bands must lie within Nyquist");
  }
  const std::size_t frames = s.num_frames;
  const std::size_t n = s.signal_len;
  QualityMask mask;
  mask.corrupted.assign(frames, 0);
  mask.samples.assign(n, 0);
  mask.frame_energy.assign(frames, 0.0);
  mask.median_energy.assign(frames, 0.0);
  mask.out_of_band_ratio.assign(frames, 0.0);

  const double df = s.fs / static_cast<double>(s.window_len);
  std::vector<std::uint8_t> in_band(s.num_bins);
  std::vector<double> weight(s.num_bins, 2.0);
  for (std::size_t k = 0; k < s.num_bins; ++k) in_band[k] = in_any_band(s.bin_hz(k), df, breath_band, heart_band);
  if (s.window_len % 2 == 0) weight.back() = 1.0;

  // A baseline offset leaks through the window into the lowest bins; the
  // window-weighted frame mean is taken out before measuring energy.
  // Frames hanging over either end see the window only on the valid part.
  const std::vector<double> window = make_window(s.window_kind, s.window_len);
  const RealFft fft(s.window_len);
  std::vector<Complex> full_spectrum(s.num_bins), edge_spectrum(s.num_bins);
  fft.forward(window, full_spectrum);
  std::vector<double> masked(s.window_len);
  std::vector<Complex> frame(s.num_bins);
  std::vector<double> power(s.num_bins);
  for (std::size_t m = 0; m < frames; ++m) {
    const Complex* x = s.values.data() + m * s.num_bins;
    const std::ptrdiff_t start = s.frame_start(m);
    const bool edge = start < 0 || start + static_cast<std::ptrdiff_t>(s.window_len) > static_cast<std::ptrdiff_t>(n);
    if (edge) {
      for (std::size_t j = 0; j < s.window_len; ++j) {
        const std::ptrdiff_t i = start + static_cast<std::ptrdiff_t>(j);
        masked[j] = i >= 0 && i < static_cast<std::ptrdiff_t>(n) ? window[j] : 0.0;
      }
      fft.forward(masked, edge_spectrum);
    }
    const std::vector<Complex>& window_spectrum = edge ? edge_spectrum : full_spectrum;
    const Complex mean = std::abs(window_spectrum[0]) > 0.0 ? x[0] / window_spectrum[0] : Complex{};
    for (std::size_t k = 0; k < s.num_bins; ++k) frame[k] = x[k] - mean * window_spectrum[k];
    kernels::magnitude_squared(frame, power);
    double total = 0.0, outside = 0.0;
    for (std::size_t k = 1; k < s.num_bins; ++k) {
      const double p = weight[k] * power[k];
      total += p;
      if (!in_band[k]) outside += p;
    }
    mask.frame_energy[m] = total;
    mask.out_of_band_ratio[m] = total > 0.0 ? outside / total : 0.0;
  }

  const std::size_t half =
      static_cast<std::size_t>(std::llround(0.5 * params.median_span_s * s.fs / static_cast<double>(s.hop)));
  for (std::size_t m = 0; m < frames; ++m) {
    const std::size_t lo = m > half ? m - half : 0;
    const std::size_t hi = std::min(frames, m + half + 1);
    mask.median_energy[m] = median_of({mask.frame_energy.begin() + static_cast<std::ptrdiff_t>(lo),
                                       mask.frame_energy.begin() + static_cast<std::ptrdiff_t>(hi)});
  }

  std::vector<std::uint8_t> screened(frames, 0);
  for (std::size_t m = 0; m < frames; ++m) {
    const double e = mask.frame_energy[m];
    const double med = mask.median_energy[m];
    bool flag = e > params.kappa * med;
    // Quiet frames (apnea) may be dominated by noise outside the bands
    // without any movement; the ratio test only applies at typical energy.
    if (!flag && e > 0.0 && e >= med && mask.out_of_band_ratio[m] > params.rho) flag = true;
    screened[m] = flag;
  }

  std::vector<std::uint8_t> suspect(n, 0);
  if (prior.size() == n) {
    for (std::size_t i = 0; i < n; ++i) suspect[i] = prior[i] == SampleQuality::rbm_suspect;
  }

  auto window_span = [&](std::size_t m) {
    const std::ptrdiff_t b = std::max<std::ptrdiff_t>(s.frame_start(m), 0);
    const std::ptrdiff_t e =
        std::min<std::ptrdiff_t>(s.frame_start(m) + static_cast<std::ptrdiff_t>(s.window_len), static_cast<std::ptrdiff_t>(n));
    return SampleSpan{static_cast<std::size_t>(b), static_cast<std::size_t>(std::max(b, e))};
  };

  std::size_t edge = 0;
  const std::vector<double> v =
      smoothed_velocity(istft(s).values, s.fs, std::max(breath_band.hi_hz, heart_band.hi_hz), edge);
  const auto lag_lo = static_cast<std::size_t>(std::ceil(s.fs / breath_band.hi_hz));
  const auto lag_hi = breath_band.lo_hz > 0.0 ? static_cast<std::size_t>(std::floor(s.fs / breath_band.lo_hz)) : n;
  std::vector<double> residual = periodic_residual(v, lag_lo, lag_hi);
  // Where smoothing ran off the record the residual of the nearest fully
  // supported sample stands in.
  if (edge > 0) {
    std::fill(residual.begin(), residual.begin() + static_cast<std::ptrdiff_t>(edge), residual[edge]);
    std::fill(residual.end() - static_cast<std::ptrdiff_t>(edge), residual.end(), residual[n - 1 - edge]);
  }
  std::vector<double> speed(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) speed[i] = std::abs(v[i]);
  const double threshold =
      std::max(params.motion_factor * median_of(residual), kResidualFloor * median_of(std::move(speed)));

  // Moving samples closer than one window belong to the same event.
  std::vector<SampleSpan> events;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(residual[i] > threshold) && !suspect[i]) continue;
    if (!events.empty() && i < events.back().end + s.window_len) {
      events.back().end = i + 1;
    } else {
      events.push_back({i, i + 1});
    }
  }
  // Screened frames with no moving sample in their window stand for
  // themselves through their hop cells.
  for (std::size_t m = 0; m < frames; ++m) {
    if (!screened[m]) continue;
    const SampleSpan w = window_span(m);
    bool located = false;
    for (const SampleSpan& e : events) located = located || (e.begin < w.end && w.begin < e.end);
    if (located) continue;
    const auto b = std::max<std::ptrdiff_t>(cell_begin(s, m), 0);
    const auto e = std::min<std::ptrdiff_t>(b + static_cast<std::ptrdiff_t>(s.hop), static_cast<std::ptrdiff_t>(n));
    if (e > b) events.push_back({static_cast<std::size_t>(b), static_cast<std::size_t>(e)});
  }
  std::sort(events.begin(), events.end(), [](const SampleSpan& x, const SampleSpan& y) { return x.begin < y.begin; });
  for (const SampleSpan& e : events) {
    if (!mask.events.empty() && e.begin <= mask.events.back().end) {
      mask.events.back().end = std::max(mask.events.back().end, e.end);
    } else {
      mask.events.push_back(e);
    }
  }

  const std::size_t reach = s.window_len / 2;
  for (const SampleSpan& e : mask.events) {
    const std::size_t b = e.begin > reach ? e.begin - reach : 0;
    const std::size_t en = std::min(n, e.end + reach);
    std::fill(mask.samples.begin() + static_cast<std::ptrdiff_t>(b), mask.samples.begin() + static_cast<std::ptrdiff_t>(en), 1);
  }
  for (std::size_t m = 0; m < frames; ++m) {
    const SampleSpan w = window_span(m);
    for (const SampleSpan& e : mask.events) {
      if (e.begin < w.end && w.begin < e.end) mask.corrupted[m] = 1;
    }
  }
  return mask;
}

MitigationResult mitigate(const DisplacementSignal& d, const RbmFilterParams& params) {
  if (!(d.fs > 0.0)) throw InvalidArgument("sample rate must be positive");
  const std::size_t window_len = samples_for(params.window_s, d.fs);
  const std::size_t hop = samples_for(params.hop_s, d.fs);
  if (d.size() < window_len) throw SignalTooShort("signal shorter than one mitigation window");

  MitigationResult result;
  {
    const Spectrogram screen = stft(d, window_len, hop, params.window);
    result.mask = detect_rbm_frames(screen, params.breath_band, params.heart_band, params, d.quality);
  }
  const QualityMask& mask = result.mask;

  DisplacementSignal levelled = d;
  const std::size_t span = samples_for(params.level_span_s, d.fs);
  remove_baseline_jumps(levelled.values, mask.events, span);
  Spectrogram s = stft(levelled, window_len, hop, params.window);

  std::vector<SampleQuality> quality(d.size(), SampleQuality::valid);
  if (d.quality.size() == d.size()) quality = d.quality;

  const double df = d.fs / static_cast<double>(window_len);
  std::vector<std::uint8_t> in_band(s.num_bins);
  for (std::size_t k = 0; k < s.num_bins; ++k) {
    in_band[k] = in_any_band(s.bin_hz(k), df, params.breath_band, params.heart_band);
  }

  std::vector<std::uint8_t> unusable(d.size(), 0);
  for (const SampleSpan& e : mask.events) {
    std::fill(unusable.begin() + static_cast<std::ptrdiff_t>(e.begin), unusable.begin() + static_cast<std::ptrdiff_t>(e.end), 1);
  }
  for (std::size_t i = 0; i < d.size(); ++i) unusable[i] |= quality[i] == SampleQuality::rbm_suspect;
  // Fitting at a few samples per period of the fastest band line is enough.
  const std::size_t stride = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(d.fs / (4.0 * std::max(params.breath_band.hi_hz, params.heart_band.hi_hz)))));

  // Each recoverable run is rebuilt from a sinusoid model fitted to the clean
  // samples around and between its events; the model's coefficients then
  // stand in for the run's in-band coefficients.
  DisplacementSignal filled = levelled;
  std::vector<std::pair<std::size_t, std::size_t>> recoverable;
  const std::size_t frames = s.num_frames;
  const auto len = static_cast<std::ptrdiff_t>(d.size());
  std::size_t m = 0;
  while (m < frames) {
    if (!mask.corrupted[m]) {
      ++m;
      continue;
    }
    const std::size_t a = m;
    while (m < frames && mask.corrupted[m]) ++m;
    const std::size_t b = m;  // one past the run

    // Samples covered by no clean frame at all.
    const std::ptrdiff_t rebuilt = static_cast<std::ptrdiff_t>((b - a) * hop) -
                                   static_cast<std::ptrdiff_t>(window_len) + static_cast<std::ptrdiff_t>(hop);
    const double gap_s = static_cast<double>(std::max<std::ptrdiff_t>(rebuilt, 0)) / d.fs;
    if (gap_s > params.max_gap_s || (a == 0 && b == frames)) {
      const double t_begin = d.t0_s + static_cast<double>(std::max<std::ptrdiff_t>(cell_begin(s, a), 0)) / d.fs;
      const double t_end =
          d.t0_s + static_cast<double>(std::min<std::ptrdiff_t>(cell_begin(s, b - 1) + static_cast<std::ptrdiff_t>(hop), len)) /
                       d.fs;
      if (params.strict) throw UnrecoverableSegment(t_begin, t_end);
      result.unrecoverable.push_back({t_begin, t_end});
      for (std::size_t f = a; f < b; ++f) {
        for (std::size_t k = 0; k < s.num_bins; ++k) {
          if (!in_band[k]) s.at(f, k) = Complex{};
        }
        for_each_cell_sample(s, f, [&](std::size_t i) { quality[i] = SampleQuality::rbm_suspect; });
      }
      continue;
    }
    recoverable.emplace_back(a, b);

    const auto r0 = std::max<std::ptrdiff_t>(s.frame_start(a), 0);
    const auto r1 = std::min<std::ptrdiff_t>(s.frame_start(b - 1) + static_cast<std::ptrdiff_t>(window_len), len);
    const auto c0 = std::max<std::ptrdiff_t>(r0 - static_cast<std::ptrdiff_t>(span), 0);
    const auto c1 = std::min<std::ptrdiff_t>(r1 + static_cast<std::ptrdiff_t>(span), len);
    std::vector<double> t, x;
    for (std::ptrdiff_t i = c0; i < c1; i += static_cast<std::ptrdiff_t>(stride)) {
      if (unusable[static_cast<std::size_t>(i)]) continue;
      t.push_back(static_cast<double>(i) / d.fs);
      x.push_back(levelled.values[static_cast<std::size_t>(i)]);
    }
    const SineModel model =
        fit_sines(t, x, 0.5 * static_cast<double>(r0 + r1) / d.fs, params.breath_band, params.heart_band);
    for (std::ptrdiff_t i = r0; i < r1; ++i) {
      filled.values[static_cast<std::size_t>(i)] = model(static_cast<double>(i) / d.fs);
    }
  }

  const Spectrogram model_s = stft(filled, window_len, hop, params.window);
  for (const auto& [a, b] : recoverable) {
    for (std::size_t f = a; f < b; ++f) {
      for (std::size_t k = 0; k < s.num_bins; ++k) s.at(f, k) = in_band[k] ? model_s.at(f, k) : Complex{};
      for_each_cell_sample(s, f, [&](std::size_t i) { quality[i] = SampleQuality::recovered; });
    }
  }

  const FrequencyBand bands[] = {params.breath_band, params.heart_band};
  result.signal = band_limit(istft(s), bands);
  result.signal.t0_s = d.t0_s;
  result.signal.quality = std::move(quality);
  return result;
}

DisplacementSignal band_limit(const DisplacementSignal& d, std::span<const FrequencyBand> bands) {
  DisplacementSignal out = d;
  const std::size_t n = d.size();
  if (n == 0) return out;
  const std::size_t m = 2 * n;
  std::vector<double> ext(m);
  std::copy(d.values.begin(), d.values.end(), ext.begin());
  std::reverse_copy(d.values.begin(), d.values.end(), ext.begin() + static_cast<std::ptrdiff_t>(n));
  const RealFft fft(m);
  std::vector<Complex> spec(fft.num_bins());
  fft.forward(ext, spec);
  double lowest = std::numeric_limits<double>::infinity();
  for (const FrequencyBand& b : bands) lowest = std::min(lowest, b.lo_hz);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * d.fs / static_cast<double>(m);
    bool keep = k > 0 && f < lowest;
    for (const FrequencyBand& b : bands) keep = keep || b.contains(f);
    if (!keep) spec[k] = Complex{};
  }
  fft.inverse(spec, ext);
  std::copy(ext.begin(), ext.begin() + static_cast<std::ptrdiff_t>(n), out.values.begin());
  return out;
}

DisplacementSignal bandpass(const DisplacementSignal& d, double f_lo, double f_hi) {
  const BandpassDesign design = design_butterworth_bandpass(f_lo, f_hi, d.fs, 0.13, 21.0);
  DisplacementSignal out = d;
  out.values = sosfiltfilt(design, d.values);
  return out;
}

void write_spectrogram_csv(const Spectrogram& s, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "frame_t_s,freq_hz,magnitude\n";
  for (std::size_t m = 0; m < s.num_frames; ++m) {
    const std::string t = format_number(s.frame_time_s(m));
    for (std::size_t k = 0; k < s.num_bins; ++k) {
      os << t << ',' << format_number(s.bin_hz(k)) << ',' << format_number(std::abs(s.at(m, k))) << '\n';
    }
  }
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace vitalradar
