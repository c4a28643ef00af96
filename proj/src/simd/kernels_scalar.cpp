// Scalar reference kernels. These define the canonical rounding behaviour the
// vector variants are tested against.

#include <cmath>

#include "kernels_internal.hpp"

namespace mmfg::simd::detail {
namespace {

double block_sum(const double* a, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    lane[0] += a[i];
    lane[1] += a[i + 1];
    lane[2] += a[i + 2];
    lane[3] += a[i + 3];
  }
  double s = fold_lanes(lane[0], lane[1], lane[2], lane[3]);
  for (std::size_t i = n4; i < n; ++i) s += a[i];
  return s;
}

double block_sum_squares(const double* a, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double sq = a[i + j] * a[i + j];
      lane[j] += sq;
    }
  }
  double s = fold_lanes(lane[0], lane[1], lane[2], lane[3]);
  for (std::size_t i = n4; i < n; ++i) {
    const double sq = a[i] * a[i];
    s += sq;
  }
  return s;
}

double block_dot(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double p = a[i + j] * b[i + j];
      lane[j] += p;
    }
  }
  double s = fold_lanes(lane[0], lane[1], lane[2], lane[3]);
  for (std::size_t i = n4; i < n; ++i) {
    const double p = a[i] * b[i];
    s += p;
  }
  return s;
}

double block_sum_squared_diff(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double d = a[i + j] - b[i + j];
      const double sq = d * d;
      lane[j] += sq;
    }
  }
  double s = fold_lanes(lane[0], lane[1], lane[2], lane[3]);
  for (std::size_t i = n4; i < n; ++i) {
    const double d = a[i] - b[i];
    const double sq = d * d;
    s += sq;
  }
  return s;
}

void euler_update(double* x, const double* drift, const double* vol, const double* dw, double dt,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double det = drift[i] * dt;
    const double sto = vol[i] * dw[i];
    const double inc = det + sto;
    x[i] = x[i] + inc;
  }
}

void axpy(double* y, double a, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double p = a * x[i];
    y[i] = y[i] + p;
  }
}

void mix(double* out, const double* a, const double* b, double w, std::size_t n) {
  const double v = 1.0 - w;
  for (std::size_t i = 0; i < n; ++i) {
    const double pa = v * a[i];
    const double pb = w * b[i];
    out[i] = pa + pb;
  }
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    // NaN propagates so divergence is never masked.
    if (d > m || std::isnan(d)) m = d;
    if (std::isnan(m)) return m;
  }
  return m;
}

}  // namespace

const Kernels scalar_kernels = {
    Isa::scalar,  block_sum, block_sum_squares, block_dot, block_sum_squared_diff,
    euler_update, axpy,      mix,               max_abs_diff,
};

}  // namespace mmfg::simd::detail
