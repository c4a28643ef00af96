// AVX2 variants. Compiled with -mavx2 only (no FMA) so products and sums
// round exactly like the scalar reference.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "kernels_internal.hpp"

namespace mmfg::simd::detail {
namespace {

double fold(__m256d acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return fold_lanes(lane[0], lane[1], lane[2], lane[3]);
}

double block_sum(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double s = fold(acc);
  for (std::size_t i = n4; i < n; ++i) s += a[i];
  return s;
}

double block_sum_squares(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double s = fold(acc);
  for (std::size_t i = n4; i < n; ++i) {
    const double sq = a[i] * a[i];
    s += sq;
  }
  return s;
}

double block_dot(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double s = fold(acc);
  for (std::size_t i = n4; i < n; ++i) {
    const double p = a[i] * b[i];
    s += p;
  }
  return s;
}

double block_sum_squared_diff(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double s = fold(acc);
  for (std::size_t i = n4; i < n; ++i) {
    const double d = a[i] - b[i];
    const double sq = d * d;
    s += sq;
  }
  return s;
}

void euler_update(double* x, const double* drift, const double* vol, const double* dw, double dt,
                  std::size_t n) {
  const __m256d vdt = _mm256_set1_pd(dt);
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d det = _mm256_mul_pd(_mm256_loadu_pd(drift + i), vdt);
    const __m256d sto = _mm256_mul_pd(_mm256_loadu_pd(vol + i), _mm256_loadu_pd(dw + i));
    _mm256_storeu_pd(x + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_add_pd(det, sto)));
  }
  for (std::size_t i = n4; i < n; ++i) {
    const double det = drift[i] * dt;
    const double sto = vol[i] * dw[i];
    const double inc = det + sto;
    x[i] = x[i] + inc;
  }
}

void axpy(double* y, double a, const double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d p = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), p));
  }
  for (std::size_t i = n4; i < n; ++i) {
    const double p = a * x[i];
    y[i] = y[i] + p;
  }
}

void mix(double* out, const double* a, const double* b, double w, std::size_t n) {
  const double v = 1.0 - w;
  const __m256d vv = _mm256_set1_pd(v);
  const __m256d vw = _mm256_set1_pd(w);
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d pa = _mm256_mul_pd(vv, _mm256_loadu_pd(a + i));
    const __m256d pb = _mm256_mul_pd(vw, _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(pa, pb));
  }
  for (std::size_t i = n4; i < n; ++i) {
    const double pa = v * a[i];
    const double pb = w * b[i];
    out[i] = pa + pb;
  }
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d m = _mm256_setzero_pd();
  __m256d nan_seen = _mm256_setzero_pd();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d d =
        _mm256_andnot_pd(sign, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    nan_seen = _mm256_or_pd(nan_seen, _mm256_cmp_pd(d, d, _CMP_UNORD_Q));
    m = _mm256_max_pd(m, d);
  }
  if (_mm256_movemask_pd(nan_seen) != 0) return std::numeric_limits<double>::quiet_NaN();
  alignas(32) double lane[4];
  _mm256_store_pd(lane, m);
  double r = lane[0];
  for (int j = 1; j < 4; ++j) r = lane[j] > r ? lane[j] : r;
  for (std::size_t i = n4; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (std::isnan(d)) return std::numeric_limits<double>::quiet_NaN();
    if (d > r) r = d;
  }
  return r;
}

}  // namespace

const Kernels avx2_kernels = {
    Isa::avx2,    block_sum, block_sum_squares, block_dot, block_sum_squared_diff,
    euler_update, axpy,      mix,               max_abs_diff,
};

}  // namespace mmfg::simd::detail
