#include <cmath>
#include <random>

#include "doctest.h"
#include "mmfg/errors.hpp"
#include "mmfg/regression.hpp"

using namespace mmfg;

TEST_CASE("constant targets are fitted exactly") {
  const std::vector<double> x{0.1, 0.5, -0.3}, g{1.0, 2.0, 3.0}, y(3, -1.0);
  const PolyFit f = fit_poly(x, g, y, 2);
  CHECK(f(0.7, 9.0) == -1.0);
  CHECK(f.rms_residual == 0.0);
  CHECK(PolyFit::constant(2.5)(1.0, 1.0) == 2.5);
}

TEST_CASE("quadratic targets are reproduced") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(500), g(500), y(500);
  auto q = [](double a, double b) { return 1.0 - 2.0 * a + 0.5 * b + 0.3 * a * a - a * b + 0.1 * b * b; };
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = d(rng);
    g[i] = 2.0 + d(rng);
    y[i] = q(x[i], g[i]);
  }
  const PolyFit f = fit_poly(x, g, y, 2);
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.rms_residual <= 1e-10);
  CHECK(f(0.3, 1.7) == doctest::Approx(q(0.3, 1.7)).epsilon(1e-10));
  std::vector<double> out(x.size());
  f.evaluate(x, g, out);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(out[i] == doctest::Approx(y[i]).epsilon(1e-9));
}

TEST_CASE("coordinates without spread drop out of the basis") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0}, g(4, 0.5), y{1.0, 3.0, 5.0, 7.0};
  const PolyFit f = fit_poly(x, g, y, 1);
  CHECK(f.active[0]);
  CHECK_FALSE(f.active[1]);
  CHECK(f(4.0, 0.5) == doctest::Approx(9.0));
}

TEST_CASE("basis sizes") {
  CHECK(basis_exponents(2, {true, true}).size() == 6);
  CHECK(basis_exponents(2, {true, false}).size() == 3);
  CHECK(basis_exponents(3, {false, false}).size() == 1);
}

TEST_CASE("degenerate designs are rejected") {
  const std::vector<double> x{0.0, 1.0}, g{2.0, 5.0}, y{1.0, 2.0};
  CHECK_THROWS_AS(fit_poly(x, g, y, 2), BasisDegeneracyError);
  // gamma is an exact affine copy of x: rank deficient.
  const std::vector<double> xs{0.0, 1.0, 2.0, 3.0, 4.0, 5.0}, gs{1.0, 3.0, 5.0, 7.0, 9.0, 11.0},
      ys{0.0, 1.0, 0.0, 1.0, 0.0, 1.0};
  CHECK_THROWS_AS(fit_poly(xs, gs, ys, 1), BasisDegeneracyError);
}
