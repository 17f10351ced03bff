// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "vitalradar/preprocessing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "vitalradar/errors.hpp"
#include "vitalradar/kernels.hpp"

namespace vitalradar {
namespace {

void require_cube(const RadarCube& cube) {
  if (cube.num_frames < 2) throw InvalidArgument("cube needs at least two frames");
  if (cube.num_bins == 0) throw InvalidArgument("cube has no range bins");
  if (cube.data.size() != cube.num_frames * cube.num_bins) throw InvalidArgument("cube shape mismatch");
}

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Solves the 3x3 system a x = b by Gaussian elimination with partial
// pivoting. Returns false for a numerically singular matrix.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b, std::array<double, 3>& x) {
  double scale = 0.0;
  for (const auto& row : a)
    for (double v : row) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return false;
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-12 * scale) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < 3; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return true;
}

}  // namespace

RadarCube remove_clutter(const RadarCube& cube) {
  require_cube(cube);
  RadarCube out = cube;
  std::vector<Complex> mean(cube.num_bins);
  kernels::column_sum(out.data, out.num_bins, mean);
  const double inv = 1.0 / static_cast<double>(cube.num_frames);
  for (Complex& m : mean) m *= inv;
  kernels::subtract_row(out.data, out.num_bins, mean);
  return out;
}

SubjectDetection detect_subject_bin(const RadarCube& cube, double threshold) {
  require_cube(cube);
  const std::size_t bins = cube.num_bins;
  std::vector<Complex> sum(bins);
  std::vector<double> energy(bins);
  kernels::column_sum(cube.data, bins, sum);
  kernels::column_energy(cube.data, bins, energy);

  SubjectDetection det;
  det.variances.resize(bins);
  const double n = static_cast<double>(cube.num_frames);
  for (std::size_t b = 0; b < bins; ++b) {
    const Complex mean = sum[b] / n;
    det.variances[b] = std::max(0.0, energy[b] / n - std::norm(mean));
  }
  det.bin = static_cast<std::size_t>(
      std::distance(det.variances.begin(), std::max_element(det.variances.begin(), det.variances.end())));
  const double best = det.variances[det.bin];
  const double median = median_of(det.variances);
  if (best == 0.0) {
    det.score = 1.0;
  } else if (median == 0.0) {
    det.score = std::numeric_limits<double>::infinity();
  } else {
    det.score = best / median;
  }
  if (det.score < threshold) throw AmbiguousDetection(det.bin, det.score);
  return det;
}

SlowTimeSignal extract_slow_time(const RadarCube& cube, std::size_t bin) {
  require_cube(cube);
  if (bin >= cube.num_bins) {
    throw InvalidArgument("range bin " + std::to_string(bin) + " out of range (cube has " +
                          std::to_string(cube.num_bins) + " bins)");
  }
  SlowTimeSignal sig;
  sig.fs = cube.frame_rate_hz;
  sig.source_bin = bin;
  sig.wavelength_mm = cube.wavelength_mm;
  sig.samples.resize(cube.num_frames);
  for (std::size_t f = 0; f < cube.num_frames; ++f) sig.samples[f] = cube.at(f, bin);
  return sig;
}

ArcCentering center_arc(const SlowTimeSignal& signal) {
  const std::size_t n = signal.samples.size();
  if (n < 2) throw InvalidArgument("slow-time signal needs at least two samples");

  Complex mean{0.0, 0.0};
  for (const Complex& s : signal.samples) mean += s;
  mean /= static_cast<double>(n);

  // Kasa fit on mean-centred coordinates: x^2 + y^2 + D x + E y + F = 0.
  std::array<std::array<double, 3>, 3> ata{};
  std::array<double, 3> atb{};
  double spread = 0.0;
  for (const Complex& s : signal.samples) {
    const double x = s.real() - mean.real();
    const double y = s.imag() - mean.imag();
    const double r2 = x * x + y * y;
    spread = std::max(spread, r2);
    const std::array<double, 3> row{x, y, 1.0};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) ata[i][j] += row[i] * row[j];
      atb[i] -= row[i] * r2;
    }
  }

  ArcCentering out;
  out.signal = signal;
  out.center = mean;
  std::array<double, 3> sol{};
  if (spread > 0.0 && solve3(ata, atb, sol)) {
    const Complex c{-0.5 * sol[0], -0.5 * sol[1]};
    const double radius2 = std::norm(c) - sol[2];
    // A radius far beyond the data spread means the arc is nearly straight.
    if (radius2 > 0.0 && radius2 < 1e4 * spread) {
      out.center = mean + c;
      out.circle_fit = true;
    }
  }
  for (Complex& s : out.signal.samples) s -= out.center;
  return out;
}

}  // namespace vitalradar
