// Copyright 2026 The vitalradar Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Compiled with -mavx2. Only reached after a CPUID check, see kernels.cpp.
// No FMA: products and sums are rounded separately, as in the scalar path.

#include <immintrin.h>

#include "kernels_internal.hpp"

namespace vitalradar::kernels::detail {
namespace {

inline const double* as_doubles(const Complex* p) { return reinterpret_cast<const double*>(p); }
inline double* as_doubles(Complex* p) { return reinterpret_cast<double*>(p); }

// Two complex columns per 256-bit lane, four per unrolled step.
void column_sum_avx2(const Complex* data, std::size_t rows, std::size_t cols, Complex* out) {
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* p = as_doubles(data + r * cols + c);
      acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(p));
      acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(p + 4));
    }
    _mm256_storeu_pd(as_doubles(out + c), acc0);
    _mm256_storeu_pd(as_doubles(out + c) + 4, acc1);
  }
  for (; c + 2 <= cols; c += 2) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t r = 0; r < rows; ++r) {
      acc = _mm256_add_pd(acc, _mm256_loadu_pd(as_doubles(data + r * cols + c)));
    }
    _mm256_storeu_pd(as_doubles(out + c), acc);
  }
  for (; c < cols; ++c) {
    __m128d acc = _mm_setzero_pd();
    for (std::size_t r = 0; r < rows; ++r) {
      acc = _mm_add_pd(acc, _mm_loadu_pd(as_doubles(data + r * cols + c)));
    }
    _mm_storeu_pd(as_doubles(out + c), acc);
  }
}

void column_energy_avx2(const Complex* data, std::size_t rows, std::size_t cols, double* out) {
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* p = as_doubles(data + r * cols + c);
      const __m256d a = _mm256_loadu_pd(p);      // re0 im0 re1 im1
      const __m256d b = _mm256_loadu_pd(p + 4);  // re2 im2 re3 im3
      const __m256d sq = _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));
      // hadd gives |x0|^2 |x2|^2 |x1|^2 |x3|^2
      acc = _mm256_add_pd(acc, _mm256_permute4x64_pd(sq, 0xD8));
    }
    _mm256_storeu_pd(out + c, acc);
  }
  for (; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double re = data[r * cols + c].real();
      const double im = data[r * cols + c].imag();
      acc += re * re + im * im;
    }
    out[c] = acc;
  }
}

void subtract_row_avx2(Complex* data, std::size_t rows, std::size_t cols, const Complex* row) {
  const double* rp = as_doubles(row);
  const std::size_t n = 2 * cols;
  for (std::size_t r = 0; r < rows; ++r) {
    double* line = as_doubles(data + r * cols);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      _mm256_storeu_pd(line + i, _mm256_sub_pd(_mm256_loadu_pd(line + i), _mm256_loadu_pd(rp + i)));
    }
    for (; i < n; ++i) line[i] -= rp[i];
  }
}

void magnitude_squared_avx2(const Complex* in, std::size_t n, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* p = as_doubles(in + i);
    const __m256d a = _mm256_loadu_pd(p);
    const __m256d b = _mm256_loadu_pd(p + 4);
    const __m256d sq = _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));
    _mm256_storeu_pd(out + i, _mm256_permute4x64_pd(sq, 0xD8));
  }
  for (; i < n; ++i) {
    const double re = in[i].real();
    const double im = in[i].imag();
    out[i] = re * re + im * im;
  }
}

void multiply_avx2(const double* a, const double* b, std::size_t n, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_avx2(const double* in, double s, std::size_t n, double* out) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vs, _mm256_loadu_pd(in + i)));
  }
  for (; i < n; ++i) out[i] = s * in[i];
}

}  // namespace

const KernelTable kAvx2Table{
    Isa::avx2,         "avx2",       column_sum_avx2, column_energy_avx2,
    subtract_row_avx2, magnitude_squared_avx2, multiply_avx2, scale_avx2,
};

}  // namespace vitalradar::kernels::detail
