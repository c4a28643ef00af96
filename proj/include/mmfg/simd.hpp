#pragma once

// Data-parallel kernels used on the particle hot paths.
//
// Every kernel has a scalar reference implementation and optional AVX2 / NEON
// variants. The active table is chosen once at startup from the CPU features;
// setting MMFG_SIMD=scalar|avx2|neon in the environment forces a variant.
//
// All variants produce bit-identical results. Reductions follow one canonical
// order: the input is cut into blocks of kReduceBlock elements, each block is
// accumulated in four interleaved lanes that are folded as (l0+l1)+(l2+l3),
// the block tail is then added sequentially, and block partials are combined
// by a pairwise tree. Elementwise kernels never fuse multiply-add.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mmfg::simd {

enum class Isa { scalar, avx2, neon };

inline constexpr std::size_t kReduceBlock = 1024;

std::string_view isa_name(Isa isa);

struct Kernels {
  Isa isa;
  // Sum of one block (size <= kReduceBlock) in canonical lane order.
  double (*block_sum)(const double* a, std::size_t n);
  double (*block_sum_squares)(const double* a, std::size_t n);
  double (*block_dot)(const double* a, const double* b, std::size_t n);
  double (*block_sum_squared_diff)(const double* a, const double* b, std::size_t n);
  // x[i] += drift[i]*dt + vol[i]*dw[i]
  void (*euler_update)(double* x, const double* drift, const double* vol, const double* dw,
                       double dt, std::size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double* y, double a, const double* x, std::size_t n);
  // out[i] = (1-w)*a[i] + w*b[i]
  void (*mix)(double* out, const double* a, const double* b, double w, std::size_t n);
  // max_i |a[i]-b[i]|
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
};

/// Table selected for this process.
const Kernels& active();

/// Table for a specific ISA; nullptr when not compiled in or not supported
/// by the running CPU.
const Kernels* kernels_for(Isa isa);

/// ISAs usable on this machine (scalar always first).
std::vector<Isa> available_isas();

// Convenience wrappers over the active table. Reductions apply the canonical
// block/pairwise order described above.
double sum(std::span<const double> a, const Kernels& k = active());
double sum_squares(std::span<const double> a, const Kernels& k = active());
double dot(std::span<const double> a, std::span<const double> b, const Kernels& k = active());
double sum_squared_diff(std::span<const double> a, std::span<const double> b,
                        const Kernels& k = active());
double mean(std::span<const double> a, const Kernels& k = active());
void euler_update(std::span<double> x, std::span<const double> drift, std::span<const double> vol,
                  std::span<const double> dw, double dt, const Kernels& k = active());
void axpy(std::span<double> y, double a, std::span<const double> x, const Kernels& k = active());
void mix(std::span<double> out, std::span<const double> a, std::span<const double> b, double w,
         const Kernels& k = active());
double max_abs_diff(std::span<const double> a, std::span<const double> b,
                    const Kernels& k = active());

}  // namespace mmfg::simd
