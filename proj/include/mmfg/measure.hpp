#pragma once

// Empirical probability measures on R^q represented as equal-weight particle
// ensembles, plus the moments, 1-D Wasserstein distances and L-derivative
// evaluations used by the solver.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mmfg {

/// Divisions by ensemble means are refused when |mean| <= kMeanFloor.
inline constexpr double kMeanFloor = 1e-8;

/// Uniformly weighted particle ensemble. Storage is coordinate-major so each
/// coordinate is one contiguous array.
class ParticleEnsemble {
 public:
  /// Zero-initialized ensemble; dim >= 1 and count >= 1.
  ParticleEnsemble(std::size_t dim, std::size_t count);

  /// One row per particle. All rows must share a dimension; entries finite.
  static ParticleEnsemble from_rows(const std::vector<std::vector<double>>& rows);
  /// One array per coordinate, all of equal length.
  static ParticleEnsemble from_columns(const std::vector<std::vector<double>>& columns);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return count_; }

  std::span<const double> coord(std::size_t j) const;
  std::span<double> coord(std::size_t j);
  double at(std::size_t particle, std::size_t j) const { return data_[j * count_ + particle]; }
  std::vector<double> particle(std::size_t i) const;

  /// Throws PreconditionError on any non-finite entry.
  void require_finite() const;

 private:
  std::size_t dim_;
  std::size_t count_;
  std::vector<double> data_;
};

/// Time-indexed sequence of ensembles sharing count and dimension.
class MeasureFlow {
 public:
  MeasureFlow(std::vector<double> grid, std::vector<ParticleEnsemble> ensembles);

  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<ParticleEnsemble>& ensembles() const noexcept { return ensembles_; }
  std::vector<ParticleEnsemble>& ensembles() noexcept { return ensembles_; }
  const ParticleEnsemble& at(std::size_t n) const { return ensembles_.at(n); }
  std::size_t size() const noexcept { return grid_.size(); }

 private:
  std::vector<double> grid_;
  std::vector<ParticleEnsemble> ensembles_;
};

std::vector<std::size_t> all_coords(std::size_t dim);

/// Arithmetic mean of the selected coordinates.
std::vector<double> mean(const ParticleEnsemble& ensemble, std::span<const std::size_t> coords);
std::vector<double> mean(const ParticleEnsemble& ensemble);

/// Mean squared Euclidean norm M2.
double second_moment(const ParticleEnsemble& ensemble);

/// Exact W2 between the coordinate-`coord` marginals of two equal-count
/// ensembles (sorted-sample coupling).
double wasserstein2_1d(const ParticleEnsemble& a, const ParticleEnsemble& b, std::size_t coord);

/// max over coordinates of wasserstein2_1d; a metric on equal-count ensembles.
double coordinate_max_w2(const ParticleEnsemble& a, const ParticleEnsemble& b);

/// sup over grid times of coordinate_max_w2.
double flow_distance(const MeasureFlow& f, const MeasureFlow& g);

using JacobianFn = std::function<Eigen::MatrixXd(std::span<const double>)>;

/// L-derivative of phi(mu) = integral of h d(mu): the Jacobian of h at each
/// particle.
std::vector<Eigen::MatrixXd> l_derivative_linear(const JacobianFn& h_jacobian,
                                                 const ParticleEnsemble& ensemble);

/// L-derivative of mu -> 1/mean(mu) in the scalar argument `mean`.
double reciprocal_mean_derivative(double mean, double mean_floor = kMeanFloor);

/// L-derivative of mu -> 1/mean_coord(mu) at every particle (a constant).
std::vector<double> l_derivative_reciprocal_mean(const ParticleEnsemble& ensemble,
                                                 std::size_t coord,
                                                 double mean_floor = kMeanFloor);

enum class Marginal { first, second };

/// Lifts derivatives taken on one marginal of a product space R^{q1} x R^{q2}
/// to the joint space by padding the other marginal's columns with zeros.
std::vector<Eigen::MatrixXd> marginal_embed(const std::vector<Eigen::MatrixXd>& deriv,
                                            Marginal which, std::size_t q1, std::size_t q2);

}  // namespace mmfg
