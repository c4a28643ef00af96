#include "mmfg/regression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "mmfg/errors.hpp"
#include "mmfg/simd.hpp"

namespace mmfg {
namespace {

constexpr double kSpreadTol = 1e-12;
constexpr double kConditionFloor = 1e-13;

double ipow(double u, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= u;
  return r;
}

bool all_equal(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

}  // namespace

std::vector<std::array<int, 2>> basis_exponents(int degree, std::array<bool, 2> active) {
  std::vector<std::array<int, 2>> out;
  for (int d = 0; d <= degree; ++d) {
    for (int i = d; i >= 0; --i) {
      const int j = d - i;
      if ((i > 0 && !active[0]) || (j > 0 && !active[1])) continue;
      out.push_back({i, j});
    }
  }
  return out;
}

PolyFit PolyFit::constant(double value) {
  PolyFit f;
  f.coef = {value};
  return f;
}

double PolyFit::operator()(double x, double gamma) const {
  if (coef.size() == 1) return coef[0];
  const double u = active[0] ? (x - center[0]) / scale[0] : 0.0;
  const double v = active[1] ? (gamma - center[1]) / scale[1] : 0.0;
  const auto exps = basis_exponents(degree, active);
  double s = 0.0;
  for (std::size_t k = 0; k < exps.size(); ++k) s += coef[k] * (ipow(u, exps[k][0]) * ipow(v, exps[k][1]));
  return s;
}

void PolyFit::evaluate(std::span<const double> x, std::span<const double> gamma,
                       std::span<double> out) const {
  if (x.size() != gamma.size() || x.size() != out.size()) {
    throw PreconditionError("PolyFit::evaluate: size mismatch");
  }
  if (coef.size() == 1) {
    std::fill(out.begin(), out.end(), coef[0]);
    return;
  }
  const auto exps = basis_exponents(degree, active);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = active[0] ? (x[i] - center[0]) / scale[0] : 0.0;
    const double v = active[1] ? (gamma[i] - center[1]) / scale[1] : 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < exps.size(); ++k) s += coef[k] * (ipow(u, exps[k][0]) * ipow(v, exps[k][1]));
    out[i] = s;
  }
}

PolyFit fit_poly(std::span<const double> x, std::span<const double> gamma,
                 std::span<const double> target, int degree) {
  const std::size_t n = target.size();
  if (n == 0 || x.size() != n || gamma.size() != n) {
    throw PreconditionError("fit_poly: empty or mismatched inputs");
  }
  if (degree < 0) throw PreconditionError("fit_poly: negative degree");
  if (all_equal(target)) return PolyFit::constant(target.front());

  PolyFit fit;
  fit.degree = degree;
  const std::span<const double> coords[2] = {x, gamma};
  for (int j = 0; j < 2; ++j) {
    const double m = simd::mean(coords[j]);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = coords[j][i] - m;
    const double sd = std::sqrt(simd::sum_squares(centered) / static_cast<double>(n));
    fit.center[j] = m;
    fit.active[j] = sd > kSpreadTol * std::max(1.0, std::fabs(m));
    fit.scale[j] = fit.active[j] ? sd : 1.0;
  }

  const auto exps = basis_exponents(degree, fit.active);
  const std::size_t p = exps.size();
  if (n < p) {
    throw BasisDegeneracyError("fit_poly: " + std::to_string(n) + " samples for " +
                               std::to_string(p) + " basis functions; lower the degree");
  }

  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = fit.active[0] ? (x[i] - fit.center[0]) / fit.scale[0] : 0.0;
    const double v = fit.active[1] ? (gamma[i] - fit.center[1]) / fit.scale[1] : 0.0;
    for (std::size_t k = 0; k < p; ++k) cols[k][i] = ipow(u, exps[k][0]) * ipow(v, exps[k][1]);
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd gram(p, p);
  Eigen::VectorXd rhs(p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      gram(a, b) = gram(b, a) = simd::dot(cols[a], cols[b]) * inv_n;
    }
    rhs(a) = simd::dot(cols[a], target) * inv_n;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > kConditionFloor * hi)) {
    throw BasisDegeneracyError("fit_poly: design matrix is rank-deficient (eigenvalue ratio " +
                               std::to_string(hi > 0.0 ? lo / hi : 0.0) +
                               "); lower the regression degree");
  }
  const Eigen::VectorXd c = gram.ldlt().solve(rhs);
  fit.coef.assign(c.data(), c.data() + p);

  std::vector<double> fitted(n);
  fit.evaluate(x, gamma, fitted);
  const double tm = simd::mean(target);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = target[i] - tm;
  const double ss_tot = simd::sum_squares(centered);
  const double ss_res = simd::sum_squared_diff(target, fitted);
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.rms_residual = std::sqrt(ss_res * inv_n);
  return fit;
}

}  // namespace mmfg
