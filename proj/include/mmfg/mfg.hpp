#pragma once

// Outer fixed point on measure flows: fix a flow, solve the two-player
// problem against it, and update the flow toward the induced law.

#include <cstddef>
#include <string>
#include <vector>

#include "mmfg/fbsde.hpp"

namespace mmfg {

struct MFGConfig {
  SolverConfig solver;
  double fp_tol = 5e-2;
  double damping = 0.5;
  std::size_t max_iter = 30;

  void validate() const;
};

struct MFGSolution {
  MeasureFlow equilibrium_flow;
  std::vector<double> alpha0;
  FBSDEPaths fbsde;
  // flow_distance(mu^j, induced flow) for every outer iteration.
  std::vector<double> fixed_point_residuals;
  // Number of flow updates performed before the residual met fp_tol.
  std::size_t flow_updates = 0;
  std::size_t inner_iterations = 0;
  StartupState startup;
};

/// Throws NonConvergenceError (carrying the flow residuals) when the outer
/// loop exceeds max_iter.
MFGSolution solve_mmmfg(const ModelSpec& model, const MFGConfig& config);

struct FixedPointCertificate {
  double strategy_change = 0.0;
  double flow_change = 0.0;
  bool passed = false;
};

/// One extra inner solve against the equilibrium flow.
FixedPointCertificate certify_fixed_point(const ModelSpec& model, const MFGConfig& config,
                                          const MFGSolution& solution);

struct DecouplingFields {
  int degree = 2;
  TimeGrid grid;
  std::vector<PolyFit> P, Pgrave, Y, Ygrave;
  // Largest RMS residual over the four fits, per time.
  std::vector<double> residual;

  double theta_Y(std::size_t n, double x, double gamma) const { return Y.at(n)(x, gamma); }
  double theta_Ygrave(std::size_t n, double x, double gamma) const { return Ygrave.at(n)(x, gamma); }
};

DecouplingFields fit_decoupling_fields(const MFGSolution& solution, int degree);

/// Everything the finite-player harness needs: the major path, the fitted
/// minor adjoint fields, the flow's per-time statistics and the startup law.
struct EquilibriumBundle {
  std::string model;
  std::vector<std::pair<std::string, double>> params;
  std::string config_echo;                       // compact JSON text
  TimeGrid grid;
  std::vector<double> alpha0;
  DecouplingFields fields;
  std::vector<LambdaSummary> flow_summaries;
  StartupState startup;

  /// Feedback of the minor player from the fitted fields.
  double minor_action(const ModelSpec& model, std::size_t n, double x, double gamma,
                      double alpha0_n) const;
};

inline constexpr const char* kSpecVersion = "1.0.0";

EquilibriumBundle export_equilibrium(const ModelSpec& model, const MFGSolution& solution,
                                     const DecouplingFields& fields,
                                     const std::string& config_echo = "{}");

std::string bundle_to_json(const EquilibriumBundle& bundle);
EquilibriumBundle bundle_from_json(const std::string& text);

}  // namespace mmfg
