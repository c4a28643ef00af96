#include "mmfg/paths.hpp"

#include <cmath>

#include "mmfg/errors.hpp"
#include "mmfg/simd.hpp"

namespace mmfg {

TimeGrid TimeGrid::make(double t_min, double horizon, std::size_t steps) {
  if (steps < 1) throw PreconditionError("TimeGrid: at least one step required");
  if (!(t_min >= 0.0) || !(horizon > t_min) || !std::isfinite(horizon)) {
    throw PreconditionError("TimeGrid: need 0 <= t_min < T");
  }
  return {t_min, horizon, steps};
}

double TimeGrid::time(std::size_t n) const {
  if (n == steps) return horizon;
  return t_min + static_cast<double>(n) * dt();
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> t(size());
  for (std::size_t n = 0; n < size(); ++n) t[n] = time(n);
  return t;
}

MeasureFlow FBSDEPaths::flow() const {
  std::vector<ParticleEnsemble> ens;
  ens.reserve(grid.size());
  for (std::size_t n = 0; n < grid.size(); ++n) {
    ParticleEnsemble e(2, particles);
    std::copy(X[n].begin(), X[n].end(), e.coord(0).begin());
    std::copy(gamma[n].begin(), gamma[n].end(), e.coord(1).begin());
    ens.push_back(std::move(e));
  }
  return MeasureFlow(grid.times(), std::move(ens));
}

double FBSDEPaths::mean_of(const std::vector<std::vector<double>>& table, std::size_t n) const {
  return simd::mean(table.at(n));
}

}  // namespace mmfg
