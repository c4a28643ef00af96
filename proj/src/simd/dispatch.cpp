#include <algorithm>
#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace mmfg::simd {
namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(MMFG_BUILD_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(MMFG_BUILD_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const Kernels* table(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &detail::scalar_kernels;
    case Isa::avx2:
#if defined(MMFG_BUILD_AVX2)
      return &detail::avx2_kernels;
#else
      return nullptr;
#endif
    case Isa::neon:
#if defined(MMFG_BUILD_NEON)
      return &detail::neon_kernels;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const Kernels& select() {
  if (const char* env = std::getenv("MMFG_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == isa_name(isa)) {
        if (const Kernels* k = kernels_for(isa)) return *k;
      }
    }
  }
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (const Kernels* k = kernels_for(isa)) return *k;
  }
  return detail::scalar_kernels;
}

// Pairwise combination of block partials.
double pairwise(const double* v, std::size_t n) {
  if (n == 1) return v[0];
  const std::size_t half = n / 2;
  return pairwise(v, half) + pairwise(v + half, n - half);
}

template <typename BlockFn>
double blocked_reduce(std::size_t n, BlockFn&& block) {
  if (n == 0) return 0.0;
  const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  if (blocks == 1) return block(0, n);
  double stack_partials[64];
  std::unique_ptr<double[]> heap;
  double* partials = stack_partials;
  if (blocks > 64) {
    heap = std::make_unique<double[]>(blocks);
    partials = heap.get();
  }
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * kReduceBlock;
    const std::size_t len = std::min(kReduceBlock, n - lo);
    partials[b] = block(lo, len);
  }
  return pairwise(partials, blocks);
}

void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("simd: span length mismatch");
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

const Kernels* kernels_for(Isa isa) { return cpu_supports(isa) ? table(isa) : nullptr; }

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (kernels_for(isa)) out.push_back(isa);
  }
  return out;
}

const Kernels& active() {
  static const Kernels& k = select();
  return k;
}

double sum(std::span<const double> a, const Kernels& k) {
  return blocked_reduce(a.size(),
                        [&](std::size_t lo, std::size_t len) { return k.block_sum(a.data() + lo, len); });
}

double sum_squares(std::span<const double> a, const Kernels& k) {
  return blocked_reduce(a.size(), [&](std::size_t lo, std::size_t len) {
    return k.block_sum_squares(a.data() + lo, len);
  });
}

double dot(std::span<const double> a, std::span<const double> b, const Kernels& k) {
  require_same_size(a.size(), b.size());
  return blocked_reduce(a.size(), [&](std::size_t lo, std::size_t len) {
    return k.block_dot(a.data() + lo, b.data() + lo, len);
  });
}

double sum_squared_diff(std::span<const double> a, std::span<const double> b, const Kernels& k) {
  require_same_size(a.size(), b.size());
  return blocked_reduce(a.size(), [&](std::size_t lo, std::size_t len) {
    return k.block_sum_squared_diff(a.data() + lo, b.data() + lo, len);
  });
}

double mean(std::span<const double> a, const Kernels& k) {
  if (a.empty()) throw std::invalid_argument("simd::mean: empty input");
  return sum(a, k) / static_cast<double>(a.size());
}

void euler_update(std::span<double> x, std::span<const double> drift, std::span<const double> vol,
                  std::span<const double> dw, double dt, const Kernels& k) {
  require_same_size(x.size(), drift.size());
  require_same_size(x.size(), vol.size());
  require_same_size(x.size(), dw.size());
  k.euler_update(x.data(), drift.data(), vol.data(), dw.data(), dt, x.size());
}

void axpy(std::span<double> y, double a, std::span<const double> x, const Kernels& k) {
  require_same_size(y.size(), x.size());
  k.axpy(y.data(), a, x.data(), y.size());
}

void mix(std::span<double> out, std::span<const double> a, std::span<const double> b, double w,
         const Kernels& k) {
  require_same_size(out.size(), a.size());
  require_same_size(out.size(), b.size());
  k.mix(out.data(), a.data(), b.data(), w, out.size());
}

double max_abs_diff(std::span<const double> a, std::span<const double> b, const Kernels& k) {
  require_same_size(a.size(), b.size());
  return k.max_abs_diff(a.data(), b.data(), a.size());
}

}  // namespace mmfg::simd
