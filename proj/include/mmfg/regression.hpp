#pragma once

// Least-squares fits of a scalar target onto a total-degree polynomial basis
// in standardized (x, gamma).

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace mmfg {

struct PolyFit {
  int degree = 0;
  std::array<double, 2> center{0.0, 0.0};
  std::array<double, 2> scale{1.0, 1.0};
  // Coordinates whose sample spread vanished are left out of the basis.
  std::array<bool, 2> active{false, false};
  std::vector<double> coef;
  double r2 = 1.0;
  double rms_residual = 0.0;

  double operator()(double x, double gamma) const;
  void evaluate(std::span<const double> x, std::span<const double> gamma,
                std::span<double> out) const;

  static PolyFit constant(double value);
};

/// Exponent pairs (i, j) of u^i v^j spanning the basis, in canonical order.
std::vector<std::array<int, 2>> basis_exponents(int degree, std::array<bool, 2> active);

/// Fits target on (x, gamma). A target whose entries are all identical is
/// returned as an exact constant. Throws BasisDegeneracyError when the design
/// is rank-deficient or has fewer samples than basis functions.
PolyFit fit_poly(std::span<const double> x, std::span<const double> gamma,
                 std::span<const double> target, int degree);

}  // namespace mmfg
