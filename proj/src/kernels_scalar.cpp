// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "kernels_internal.hpp"

namespace vitalradar::kernels::detail {
namespace {

void column_sum_scalar(const Complex* data, std::size_t rows, std::size_t cols, Complex* out) {
  for (std::size_t c = 0; c < cols; ++c) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      re += data[r * cols + c].real();
      im += data[r * cols + c].imag();
    }
    out[c] = {re, im};
  }
}

void column_energy_scalar(const Complex* data, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double re = data[r * cols + c].real();
      const double im = data[r * cols + c].imag();
      acc += re * re + im * im;
    }
    out[c] = acc;
  }
}

void subtract_row_scalar(Complex* data, std::size_t rows, std::size_t cols, const Complex* row) {
  for (std::size_t r = 0; r < rows; ++r) {
    Complex* line = data + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      line[c] = {line[c].real() - row[c].real(), line[c].imag() - row[c].imag()};
    }
  }
}

void magnitude_squared_scalar(const Complex* in, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double re = in[i].real();
    const double im = in[i].imag();
    out[i] = re * re + im * im;
  }
}

void multiply_scalar(const double* a, const double* b, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_scalar(const double* in, double s, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = s * in[i];
}

}  // namespace

const KernelTable kScalarTable{
    Isa::scalar,          "scalar",        column_sum_scalar, column_energy_scalar,
    subtract_row_scalar,  magnitude_squared_scalar, multiply_scalar, scale_scalar,
};

}  // namespace vitalradar::kernels::detail
