#include "mmfg/measure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmfg/errors.hpp"
#include "mmfg/simd.hpp"

namespace mmfg {

ParticleEnsemble::ParticleEnsemble(std::size_t dim, std::size_t count)
    : dim_(dim), count_(count), data_(dim * count, 0.0) {
  if (dim == 0) throw PreconditionError("ParticleEnsemble: dimension must be positive");
  if (count == 0) throw PreconditionError("ParticleEnsemble: empty ensemble");
}

ParticleEnsemble ParticleEnsemble::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw PreconditionError("ParticleEnsemble: empty ensemble");
  ParticleEnsemble e(rows.front().size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != e.dim_) {
      throw PreconditionError("ParticleEnsemble: particle " + std::to_string(i) +
                              " has mismatched dimension");
    }
    for (std::size_t j = 0; j < e.dim_; ++j) e.data_[j * e.count_ + i] = rows[i][j];
  }
  e.require_finite();
  return e;
}

ParticleEnsemble ParticleEnsemble::from_columns(const std::vector<std::vector<double>>& columns) {
  if (columns.empty()) throw PreconditionError("ParticleEnsemble: dimension must be positive");
  ParticleEnsemble e(columns.size(), columns.front().size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != e.count_) {
      throw PreconditionError("ParticleEnsemble: coordinate arrays differ in length");
    }
    std::copy(columns[j].begin(), columns[j].end(), e.data_.begin() + j * e.count_);
  }
  e.require_finite();
  return e;
}

std::span<const double> ParticleEnsemble::coord(std::size_t j) const {
  if (j >= dim_) throw PreconditionError("ParticleEnsemble: coordinate out of range");
  return {data_.data() + j * count_, count_};
}

std::span<double> ParticleEnsemble::coord(std::size_t j) {
  if (j >= dim_) throw PreconditionError("ParticleEnsemble: coordinate out of range");
  return {data_.data() + j * count_, count_};
}

std::vector<double> ParticleEnsemble::particle(std::size_t i) const {
  std::vector<double> p(dim_);
  for (std::size_t j = 0; j < dim_; ++j) p[j] = at(i, j);
  return p;
}

void ParticleEnsemble::require_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) throw PreconditionError("ParticleEnsemble: non-finite entry");
  }
}

MeasureFlow::MeasureFlow(std::vector<double> grid, std::vector<ParticleEnsemble> ensembles)
    : grid_(std::move(grid)), ensembles_(std::move(ensembles)) {
  if (grid_.empty()) throw PreconditionError("MeasureFlow: empty grid");
  if (grid_.size() != ensembles_.size()) {
    throw PreconditionError("MeasureFlow: grid and ensemble counts differ");
  }
  for (std::size_t n = 1; n < grid_.size(); ++n) {
    if (!(grid_[n] > grid_[n - 1])) throw PreconditionError("MeasureFlow: grid not increasing");
  }
  if (grid_.front() < 0.0) throw PreconditionError("MeasureFlow: grid starts before 0");
  const auto& first = ensembles_.front();
  for (const auto& e : ensembles_) {
    if (e.count() != first.count() || e.dim() != first.dim()) {
      throw PreconditionError("MeasureFlow: ensembles differ in count or dimension");
    }
  }
}

std::vector<std::size_t> all_coords(std::size_t dim) {
  std::vector<std::size_t> c(dim);
  for (std::size_t j = 0; j < dim; ++j) c[j] = j;
  return c;
}

std::vector<double> mean(const ParticleEnsemble& ensemble, std::span<const std::size_t> coords) {
  if (coords.empty()) throw PreconditionError("mean: empty coordinate selection");
  std::vector<double> m;
  m.reserve(coords.size());
  for (std::size_t j : coords) m.push_back(simd::mean(ensemble.coord(j)));
  return m;
}

std::vector<double> mean(const ParticleEnsemble& ensemble) {
  const auto c = all_coords(ensemble.dim());
  return mean(ensemble, c);
}

double second_moment(const ParticleEnsemble& ensemble) {
  double s = 0.0;
  for (std::size_t j = 0; j < ensemble.dim(); ++j) s += simd::sum_squares(ensemble.coord(j));
  return s / static_cast<double>(ensemble.count());
}

double wasserstein2_1d(const ParticleEnsemble& a, const ParticleEnsemble& b, std::size_t coord) {
  if (a.count() != b.count()) {
    throw PreconditionError("wasserstein2_1d: particle counts differ (" +
                            std::to_string(a.count()) + " vs " + std::to_string(b.count()) + ")");
  }
  std::vector<double> sa(a.coord(coord).begin(), a.coord(coord).end());
  std::vector<double> sb(b.coord(coord).begin(), b.coord(coord).end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return std::sqrt(simd::sum_squared_diff(sa, sb) / static_cast<double>(sa.size()));
}

double coordinate_max_w2(const ParticleEnsemble& a, const ParticleEnsemble& b) {
  if (a.dim() != b.dim()) throw PreconditionError("coordinate_max_w2: dimension mismatch");
  double d = 0.0;
  for (std::size_t j = 0; j < a.dim(); ++j) d = std::max(d, wasserstein2_1d(a, b, j));
  return d;
}

double flow_distance(const MeasureFlow& f, const MeasureFlow& g) {
  if (f.grid() != g.grid()) throw PreconditionError("flow_distance: grids differ");
  double d = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) d = std::max(d, coordinate_max_w2(f.at(n), g.at(n)));
  return d;
}

std::vector<Eigen::MatrixXd> l_derivative_linear(const JacobianFn& h_jacobian,
                                                 const ParticleEnsemble& ensemble) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(ensemble.count());
  for (std::size_t i = 0; i < ensemble.count(); ++i) {
    const auto p = ensemble.particle(i);
    out.push_back(h_jacobian(p));
  }
  return out;
}

double reciprocal_mean_derivative(double mean, double mean_floor) {
  if (!(std::fabs(mean) > mean_floor)) {
    throw SingularMeanError("reciprocal mean: |mean| = " + std::to_string(std::fabs(mean)) +
                            " is at or below the mean floor");
  }
  return -1.0 / (mean * mean);
}

std::vector<double> l_derivative_reciprocal_mean(const ParticleEnsemble& ensemble,
                                                 std::size_t coord, double mean_floor) {
  const double m = simd::mean(ensemble.coord(coord));
  return std::vector<double>(ensemble.count(), reciprocal_mean_derivative(m, mean_floor));
}

std::vector<Eigen::MatrixXd> marginal_embed(const std::vector<Eigen::MatrixXd>& deriv,
                                            Marginal which, std::size_t q1, std::size_t q2) {
  const std::size_t own = which == Marginal::first ? q1 : q2;
  std::vector<Eigen::MatrixXd> out;
  out.reserve(deriv.size());
  for (const auto& d : deriv) {
    if (static_cast<std::size_t>(d.cols()) != own) {
      throw PreconditionError("marginal_embed: derivative has " + std::to_string(d.cols()) +
                              " columns, marginal has dimension " + std::to_string(own));
    }
    Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(d.rows(), static_cast<Eigen::Index>(q1 + q2));
    if (which == Marginal::first) {
      joint.leftCols(static_cast<Eigen::Index>(q1)) = d;
    } else {
      joint.rightCols(static_cast<Eigen::Index>(q2)) = d;
    }
    out.push_back(std::move(joint));
  }
  return out;
}

}  // namespace mmfg
