// NEON (AArch64) variants. Lanes 0-1 live in the first register and lanes
// 2-3 in the second, which reproduces the scalar four-lane order.

#include <arm_neon.h>

#include <cmath>
#include <limits>

#include "kernels_internal.hpp"

namespace mmfg::simd::detail {
namespace {

double fold(float64x2_t lo, float64x2_t hi) {
  return fold_lanes(vgetq_lane_f64(lo, 0), vgetq_lane_f64(lo, 1), vgetq_lane_f64(hi, 0),
                    vgetq_lane_f64(hi, 1));
}

double block_sum(const double* a, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    lo = vaddq_f64(lo, vld1q_f64(a + i));
    hi = vaddq_f64(hi, vld1q_f64(a + i + 2));
  }
  double s = fold(lo, hi);
  for (std::size_t i = n4; i < n; ++i) s += a[i];
  return s;
}

double block_sum_squares(const double* a, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const float64x2_t v0 = vld1q_f64(a + i);
    const float64x2_t v1 = vld1q_f64(a + i + 2);
    lo = vaddq_f64(lo, vmulq_f64(v0, v0));
    hi = vaddq_f64(hi, vmulq_f64(v1, v1));
  }
  double s = fold(lo, hi);
  for (std::size_t i = n4; i < n; ++i) {
    const double sq = a[i] * a[i];
    s += sq;
  }
  return s;
}

double block_dot(const double* a, const double* b, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double s = fold(lo, hi);
  for (std::size_t i = n4; i < n; ++i) {
    const double p = a[i] * b[i];
    s += p;
  }
  return s;
}

double block_sum_squared_diff(const double* a, const double* b, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    lo = vaddq_f64(lo, vmulq_f64(d0, d0));
    hi = vaddq_f64(hi, vmulq_f64(d1, d1));
  }
  double s = fold(lo, hi);
  for (std::size_t i = n4; i < n; ++i) {
    const double d = a[i] - b[i];
    const double sq = d * d;
    s += sq;
  }
  return s;
}

void euler_update(double* x, const double* drift, const double* vol, const double* dw, double dt,
                  std::size_t n) {
  const float64x2_t vdt = vdupq_n_f64(dt);
  const std::size_t n2 = n - n % 2;
  for (std::size_t i = 0; i < n2; i += 2) {
    const float64x2_t det = vmulq_f64(vld1q_f64(drift + i), vdt);
    const float64x2_t sto = vmulq_f64(vld1q_f64(vol + i), vld1q_f64(dw + i));
    vst1q_f64(x + i, vaddq_f64(vld1q_f64(x + i), vaddq_f64(det, sto)));
  }
  for (std::size_t i = n2; i < n; ++i) {
    const double det = drift[i] * dt;
    const double sto = vol[i] * dw[i];
    const double inc = det + sto;
    x[i] = x[i] + inc;
  }
}

void axpy(double* y, double a, const double* x, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  const std::size_t n2 = n - n % 2;
  for (std::size_t i = 0; i < n2; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (std::size_t i = n2; i < n; ++i) {
    const double p = a * x[i];
    y[i] = y[i] + p;
  }
}

void mix(double* out, const double* a, const double* b, double w, std::size_t n) {
  const double v = 1.0 - w;
  const float64x2_t vv = vdupq_n_f64(v);
  const float64x2_t vw = vdupq_n_f64(w);
  const std::size_t n2 = n - n % 2;
  for (std::size_t i = 0; i < n2; i += 2) {
    vst1q_f64(out + i, vaddq_f64(vmulq_f64(vv, vld1q_f64(a + i)), vmulq_f64(vw, vld1q_f64(b + i))));
  }
  for (std::size_t i = n2; i < n; ++i) {
    const double pa = v * a[i];
    const double pb = w * b[i];
    out[i] = pa + pb;
  }
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  double r = 0.0;
  const std::size_t n2 = n - n % 2;
  float64x2_t m = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < n2; i += 2) {
    const float64x2_t d = vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    // vmaxq_f64 propagates NaN.
    m = vmaxq_f64(m, d);
  }
  r = vmaxvq_f64(m);
  if (std::isnan(r)) return std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = n2; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (std::isnan(d)) return std::numeric_limits<double>::quiet_NaN();
    if (d > r) r = d;
  }
  return r;
}

}  // namespace

const Kernels neon_kernels = {
    Isa::neon,    block_sum, block_sum_squares, block_dot, block_sum_squared_diff,
    euler_update, axpy,      mix,               max_abs_diff,
};

}  // namespace mmfg::simd::detail
