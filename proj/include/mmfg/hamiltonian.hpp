#pragma once

// Reduced Hamiltonians of the major and minor players, their minimizers, and
// the two-level check of the stochastic maximum principle's necessary
// conditions on solved paths.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mmfg/model.hpp"
#include "mmfg/paths.hpp"

namespace mmfg {

/// b * P + alpha * Pgrave + f0
double eval_H0R(const ModelSpec& model, const State& s, const AdjointState& adj, double a0,
                double a, const LambdaSummary& lambda);
/// b * Y + alpha * Ygrave + f
double eval_HR(const ModelSpec& model, const State& s, const AdjointState& adj, double a0,
               double a, const LambdaSummary& lambda);

double dH0R_dalpha0(const ModelSpec& model, const State& s, const AdjointState& adj, double a0,
                    double a, const LambdaSummary& lambda);
double dHR_dalpha(const ModelSpec& model, const State& s, const AdjointState& adj, double a0,
                  double a, const LambdaSummary& lambda);

/// Particle average of H0R over a joint (x, gamma, P, Pgrave) ensemble with
/// per-particle minor actions `alpha`.
double mean_H0R(const ModelSpec& model, double t, const JointView& v, std::span<const double> alpha,
                double a0, const LambdaSummary& lambda);
double mean_dH0R_dalpha0(const ModelSpec& model, double t, const JointView& v,
                         std::span<const double> alpha, double a0, const LambdaSummary& lambda);

struct MinimizerOptions {
  double grad_tol = 1e-8;
  std::size_t max_iter = 500;
  double armijo = 1e-4;
  double shrink = 0.5;
};

struct ScalarMinimum {
  double argmin = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
};

/// Projected gradient descent with Armijo backtracking and Barzilai-Borwein
/// trial steps, started at the projection of 0.
ScalarMinimum projected_gradient(const std::function<double(double)>& f,
                                 const std::function<double(double)>& df, const ActionSet& set,
                                 const MinimizerOptions& opts = {});

enum class MinimizerMode { automatic, numeric };

/// Minimizer of a0 -> mean_H0R. The law lambda is summarized from the joint
/// ensemble itself. Uses the model's closed form unless mode is numeric.
double minimize_alpha0(const ModelSpec& model, double t, const JointView& v,
                       std::span<const double> alpha, MinimizerMode mode = MinimizerMode::automatic,
                       const MinimizerOptions& opts = {});

/// Per-state minimizer of a -> H^R. Throws SingularControlError when the
/// minor convexity constant at a0 degenerates.
double minimize_alpha(const ModelSpec& model, const State& s, const AdjointState& adj, double a0,
                      const LambdaSummary& lambda, MinimizerMode mode = MinimizerMode::automatic,
                      const MinimizerOptions& opts = {});

/// Throws PreconditionError when the averaged H0R shows a mixed a0/alpha
/// second difference, i.e. the major minimizer would depend on alpha.
void check_major_separability(const ModelSpec& model, double t, const JointView& v,
                              std::span<const double> alpha);

/// Candidate actions for the verifier: absolute values, or offsets added to
/// the tested action.
struct ActionGrid {
  std::vector<double> values;
  bool relative = false;

  static ActionGrid uniform(double lo, double hi, double step);
  static ActionGrid offsets(std::vector<double> deltas);
};

struct VerifyOptions {
  ActionGrid major_grid = ActionGrid::offsets({-1.0, -0.5, -0.25, -0.1, -1e-2, -1e-3, 1e-3, 1e-2,
                                               0.1, 0.25, 0.5, 1.0});
  ActionGrid minor_grid = ActionGrid::offsets({-1.0, -0.5, -0.25, -0.1, -1e-2, -1e-3, 1e-3, 1e-2,
                                               0.1, 0.25, 0.5, 1.0});
  std::size_t particle_stride = 1;
  double tolerance = 1e-6;
};

struct NecessaryConditionReport {
  double max_violation = 0.0;
  double major_violation = 0.0;
  double minor_violation = 0.0;
  std::size_t major_time_index = 0;
  std::size_t minor_time_index = 0;
  std::size_t minor_particle = 0;
  double tolerance = 1e-6;
  bool passed = true;
};

/// (i) ensemble-average H0R at alpha0[n] against every major grid action and
/// (ii) per-particle H^R at alpha[n][i] against every minor grid action.
/// Violations are floored at 0.
NecessaryConditionReport verify_necessary_conditions(
    const ModelSpec& model, const FBSDEPaths& paths, std::span<const double> alpha0,
    const std::vector<std::vector<double>>& alpha, const VerifyOptions& opts = {});

}  // namespace mmfg
