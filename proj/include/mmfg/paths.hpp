#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mmfg/measure.hpp"
#include "mmfg/model.hpp"
#include "mmfg/regression.hpp"

namespace mmfg {

/// Uniform grid t_n = t_min + n * dt on [t_min, T], n = 0..steps.
struct TimeGrid {
  double t_min = 0.0;
  double horizon = 1.0;
  std::size_t steps = 1;

  static TimeGrid make(double t_min, double horizon, std::size_t steps);
  double dt() const { return (horizon - t_min) / static_cast<double>(steps); }
  double time(std::size_t n) const;
  std::size_t size() const { return steps + 1; }
  std::vector<double> times() const;
  bool operator==(const TimeGrid& o) const {
    return t_min == o.t_min && horizon == o.horizon && steps == o.steps;
  }
};

/// Per-time fitted adjoint fields: P, Pgrave, Y, Ygrave.
using AdjointFits = std::array<PolyFit, 4>;

/// Particle paths of the forward-backward system. Every per-particle table is
/// indexed [n][i].
struct FBSDEPaths {
  TimeGrid grid;
  std::size_t particles = 0;
  std::vector<std::vector<double>> X, gamma, P, Pgrave, Y, Ygrave, alpha;
  std::vector<double> alpha0;
  // Statistics fed to the minor coefficients at each time.
  std::vector<LambdaSummary> minor_lambda;
  // Smallest R^2 over the four adjoint regressions, per backward step.
  std::vector<double> regression_r2;
  std::vector<AdjointFits> fits;
  std::vector<double> picard_residuals;
  std::size_t picard_iterations = 0;

  MeasureFlow flow() const;
  JointView joint(std::size_t n) const { return {X[n], gamma[n], P[n], Pgrave[n]}; }
  double mean_of(const std::vector<std::vector<double>>& table, std::size_t n) const;
};

}  // namespace mmfg
