// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace vitalradar {

// Real-input FFT of a fixed length. Plans are created once per length and
// shared; executing a plan is safe from several threads.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }
  std::size_t num_bins() const { return n_ / 2 + 1; }

  // in: n samples, out: n/2+1 bins. Unnormalized.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  // in: n/2+1 bins, out: n samples. Scaled by 1/n so inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  std::size_t n_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace vitalradar
