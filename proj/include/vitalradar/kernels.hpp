// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Data-parallel inner loops used by the pipeline. Each kernel has a scalar
// reference implementation and, on x86-64, an AVX2 variant. The variant is
// chosen once at startup from CPUID; set VITALRADAR_ISA=scalar to force the
// reference path. The AVX2 variants keep the scalar accumulation order per
// output element, so both paths produce identical results.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace vitalradar::kernels {

using Complex = std::complex<double>;

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;
  // out[c] = sum_r data[r * cols + c]
  void (*column_sum)(const Complex* data, std::size_t rows, std::size_t cols, Complex* out);
  // out[c] = sum_r |data[r * cols + c]|^2
  void (*column_energy)(const Complex* data, std::size_t rows, std::size_t cols, double* out);
  // data[r * cols + c] -= row[c]
  void (*subtract_row)(Complex* data, std::size_t rows, std::size_t cols, const Complex* row);
  // out[i] = |in[i]|^2
  void (*magnitude_squared)(const Complex* in, std::size_t n, double* out);
  // out[i] = a[i] * b[i]
  void (*multiply)(const double* a, const double* b, std::size_t n, double* out);
  // out[i] = scale * in[i]
  void (*scale)(const double* in, double scale, std::size_t n, double* out);
};

const KernelTable& scalar_table();
// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_table();
const KernelTable& active();

inline void column_sum(std::span<const Complex> data, std::size_t cols, std::span<Complex> out) {
  active().column_sum(data.data(), data.size() / cols, cols, out.data());
}
inline void column_energy(std::span<const Complex> data, std::size_t cols, std::span<double> out) {
  active().column_energy(data.data(), data.size() / cols, cols, out.data());
}
inline void subtract_row(std::span<Complex> data, std::size_t cols, std::span<const Complex> row) {
  active().subtract_row(data.data(), data.size() / cols, cols, row.data());
}
inline void magnitude_squared(std::span<const Complex> in, std::span<double> out) {
  active().magnitude_squared(in.data(), in.size(), out.data());
}
inline void multiply(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  active().multiply(a.data(), b.data(), a.size(), out.data());
}
inline void scale(std::span<const double> in, double s, std::span<double> out) {
  active().scale(in.data(), s, in.size(), out.data());
}

}  // namespace vitalradar::kernels
