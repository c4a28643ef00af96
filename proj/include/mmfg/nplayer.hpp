#pragma once

// Finite game with one major and N minor players driven by the exported
// equilibrium, and Monte Carlo estimates of its epsilon-Nash gap.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmfg/fbsde.hpp"
#include "mmfg/mfg.hpp"

namespace mmfg {

struct DeviationSpec {
  // Constant shifts of the major path; 0 is the null deviation.
  std::vector<double> major_shifts{-0.5, -0.25, 0.0, 0.25, 0.5};
  // Constant shifts of one minor player's feedback.
  std::vector<double> minor_shifts{-0.5, -0.25, 0.0, 0.25, 0.5};
  // Also try each sampled player's best response to the frozen flow.
  bool best_response = true;
  // Number of minor players whose deviations are evaluated.
  std::size_t sampled_players = 5;
};

struct FiniteGameConfig {
  std::size_t players = 20;
  // Defaults to the bundle's grid.
  std::optional<TimeGrid> grid;
  std::uint64_t seed = 1;
  std::size_t mc_runs = 100;
  DeviationSpec deviations;
  std::size_t threads = 1;
  // Settings of the single-player re-solve behind the best response.
  SolverConfig best_response_solver = [] {
    SolverConfig c;
    c.particles = 1000;
    return c;
  }();
  // Optional noise stream id per player (a permutation of 0..N-1).
  std::vector<std::uint64_t> player_streams;

  void validate() const;
};

struct FiniteGameResult {
  std::size_t players = 0;
  std::size_t mc_runs = 0;
  double J0 = 0.0;
  double J0_se = 0.0;
  std::vector<double> Ji;
  std::vector<double> Ji_se;
  // [run][0] major cost, [run][i] minor player i's cost (1-based).
  std::vector<std::vector<double>> run_costs;
  // Paths of run 0, indexed [n][player].
  std::vector<std::vector<double>> X, gamma, alpha;
  std::vector<double> alpha0;
  // Per-run max over time of |empirical mean gamma - bundle mean gamma|,
  // averaged over runs, with its standard error.
  double mean_gamma_gap = 0.0;
  double mean_gamma_gap_se = 0.0;
};

FiniteGameResult simulate_finite_game(const ModelSpec& model, const EquilibriumBundle& bundle,
                                      const FiniteGameConfig& cfg);

struct DeviationResult {
  std::string who;   // "major" | "minor"
  std::size_t player = 0;
  std::string kind;  // "shift" | "best_response"
  double delta = 0.0;
  double mean_cost = 0.0;
  // Candidate cost minus deviation cost for the deviator, averaged over runs.
  double gain = 0.0;
  double gain_se = 0.0;
};

struct NashGapReport {
  std::size_t players = 0;
  std::size_t mc_runs = 0;
  double J0_hat = 0.0;
  double J0_se = 0.0;
  std::vector<double> Ji_hat;
  std::vector<double> Ji_se;
  std::vector<DeviationResult> deviations;
  double eps_major = 0.0;
  double eps_major_se = 0.0;
  double eps_minor_max = 0.0;
  double eps_minor_se = 0.0;
  std::vector<std::vector<double>> run_costs;
};

NashGapReport estimate_eps_nash(const ModelSpec& model, const EquilibriumBundle& bundle,
                                const FiniteGameConfig& cfg);

std::string report_to_json(const NashGapReport& report);
/// Long-format CSV with columns run, player, cost (player 0 is the major).
std::string run_costs_csv(const std::vector<std::vector<double>>& run_costs);

}  // namespace mmfg
