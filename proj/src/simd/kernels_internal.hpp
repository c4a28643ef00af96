#pragma once

#include "mmfg/simd.hpp"

namespace mmfg::simd::detail {

extern const Kernels scalar_kernels;
#if defined(MMFG_BUILD_AVX2)
extern const Kernels avx2_kernels;
#endif
#if defined(MMFG_BUILD_NEON)
extern const Kernels neon_kernels;
#endif

// Fold of four lane accumulators shared by every variant.
inline double fold_lanes(double l0, double l1, double l2, double l3) {
  return (l0 + l1) + (l2 + l3);
}

}  // namespace mmfg::simd::detail
