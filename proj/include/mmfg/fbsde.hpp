#pragma once

// Particle solver for the forward-backward system of the maximum principle on
// the enlarged state (X, gamma): Euler-Maruyama forward passes, regression
// backward passes, and Picard iteration on strategies. Also the closed ODE
// for the means of the reducible examples.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mmfg/hamiltonian.hpp"
#include "mmfg/measure.hpp"
#include "mmfg/model.hpp"
#include "mmfg/paths.hpp"

namespace mmfg {

struct PicardConfig {
  std::size_t max_iter = 50;
  double tol = 1e-3;
  double damping = 0.5;
};

struct SolverConfig {
  std::size_t particles = 10000;
  std::uint64_t seed = 1;
  PicardConfig picard;
  int degree = 2;
  double t_min = 0.01;
  std::size_t steps = 200;
  std::size_t threads = 1;
  MinimizerMode minimizer = MinimizerMode::automatic;
  std::size_t ode_substeps = 64;

  void validate() const;
  TimeGrid grid(const ModelSpec& model) const { return TimeGrid::make(t_min, model.horizon, steps); }
};

/// Mixes a base seed with two stream indices (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Frozen randomness: one standard normal per particle for the initial state
/// and Brownian increments dW[n][i] ~ N(0, dt). Particle i draws from its
/// own stream, so values do not depend on the particle count or threads.
struct Noise {
  std::vector<double> z0;
  std::vector<std::vector<double>> dW;
};

Noise make_noise(std::size_t particles, const TimeGrid& grid, std::uint64_t seed,
                 std::uint64_t stream_offset = 0);

/// Law of (X, gamma) at the first grid time.
struct StartupState {
  double mean_x = 0.0;
  double var_x = 0.0;
  double gamma = 0.0;
};

/// Initial law at t_min. For t_min = 0 it is the model's initial condition;
/// otherwise the equilibrium is carried across [0, t_min] with the closed-form
/// small-time solution of the mean ODE (requires a MeanFieldReduction).
StartupState analytic_startup(const ModelSpec& model, double t_min, std::size_t substeps = 64);

struct Strategies {
  std::vector<double> alpha0;
  std::vector<std::vector<double>> alpha;
};

Strategies constant_strategies(const TimeGrid& grid, std::size_t particles, double a0, double a);
double strategy_distance(const Strategies& a, const Strategies& b);

/// Minor feedback: (n, particle, t, x, gamma, lambda) -> action.
using Feedback = std::function<double(std::size_t, std::size_t, double, double, double,
                                      const LambdaSummary&)>;

/// Euler-Maruyama on X, exact Euler on gamma. Minor coefficients read
/// `frozen_lambda[n]` when given, otherwise the current ensemble's summary.
/// Throws DivergenceError on a non-finite state.
FBSDEPaths simulate_forward(const ModelSpec& model, const TimeGrid& grid,
                            std::span<const double> alpha0, const Feedback& feedback,
                            const Noise& noise, const StartupState& start,
                            const std::vector<LambdaSummary>* frozen_lambda = nullptr,
                            std::size_t threads = 1);

/// Backward induction of (P, Pgrave, Y, Ygrave) from the terminal conditions,
/// with conditional expectations by regression on (X_n, gamma_n).
/// `minor_only` skips the major adjoints.
void solve_backward(const ModelSpec& model, FBSDEPaths& paths, int degree,
                    bool minor_only = false, std::size_t threads = 1);

/// Frozen randomness and startup law shared by every solve of one config.
struct SolveContext {
  TimeGrid grid;
  Noise noise;
  StartupState startup;
};

SolveContext make_context(const ModelSpec& model, const SolverConfig& config);

/// Picard iteration on strategies against the fixed flow `mu`. Returns the
/// paths of the last iterate together with its residual history.
FBSDEPaths picard_solve(const ModelSpec& model, const SolverConfig& config, const MeasureFlow& mu,
                        const SolveContext& ctx, const Strategies* warm_start = nullptr);
FBSDEPaths picard_solve(const ModelSpec& model, const SolverConfig& config, const MeasureFlow& mu);

/// One minimization sweep over solved paths: alpha0 per time from the joint
/// ensemble, then alpha per particle.
Strategies minimize_strategies(const ModelSpec& model, const FBSDEPaths& paths,
                               MinimizerMode mode = MinimizerMode::automatic,
                               std::size_t threads = 1);

/// Flow of the uncontrolled dynamics (alpha0 = alpha = projection of 0).
MeasureFlow uncontrolled_flow(const ModelSpec& model, const SolveContext& ctx,
                              std::size_t threads = 1);

/// Feedback policy of one minor player facing a frozen major path and a
/// frozen flow of measure statistics.
struct MinorPolicy {
  TimeGrid grid;
  std::vector<double> alpha0;
  std::vector<LambdaSummary> lambda;
  std::vector<PolyFit> Y;
  std::vector<PolyFit> Ygrave;

  double action(const ModelSpec& model, std::size_t n, double x, double gamma) const;
};

MinorPolicy solve_minor_best_response(const ModelSpec& model, const SolverConfig& config,
                                      const TimeGrid& grid, std::span<const double> alpha0,
                                      const std::vector<LambdaSummary>& lambda,
                                      const StartupState& start);

struct MeanFieldOdeResult {
  std::vector<double> t;
  std::vector<double> mean_gamma;
  std::vector<double> mean_x;
  std::vector<double> P;
  std::vector<double> Pgrave;
  std::vector<double> alpha0;
  std::vector<double> alpha;
  double Y = 0.0;
  double Ygrave = 0.0;
  double p0 = 0.0;
  StartupState startup;
  std::size_t shooting_iterations = 0;
};

/// RK4 with `substeps` steps per grid interval on [t_min, T]; the unknown
/// initial major adjoint is found by shooting when it is not constant.
MeanFieldOdeResult mean_field_ode_solve(const ModelSpec& model, const TimeGrid& grid,
                                        std::size_t substeps = 64);

}  // namespace mmfg
