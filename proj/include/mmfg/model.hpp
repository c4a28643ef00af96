#pragma once

// Coefficient bundle of a major/minor game on the enlarged minor state
// (x, gamma), with d = k = k0 = m = 1 and no major state process.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmfg/measure.hpp"

namespace mmfg {

/// Measure statistics a coefficient may read.
enum Statistic : unsigned {
  kMeanX = 1u << 0,
  kMeanGamma = 1u << 1,
  kSecondMoment = 1u << 2,
};

/// Statistics of a law lambda on (x, gamma) that coefficients are allowed to
/// read. `available` records which ones were actually computed.
struct LambdaSummary {
  double mean_x = 0.0;
  double mean_gamma = 0.0;
  double second_moment = 0.0;
  unsigned available = 0;

  static LambdaSummary of(double mean_x, double mean_gamma, double second_moment) {
    return {mean_x, mean_gamma, second_moment, kMeanX | kMeanGamma | kSecondMoment};
  }
};

LambdaSummary summarize(std::span<const double> x, std::span<const double> gamma);
/// Joint ensemble with coordinates (x, gamma).
LambdaSummary summarize(const ParticleEnsemble& joint);

/// Throws ConfigError when `summary` lacks a statistic in `needed`.
void require_statistics(const LambdaSummary& summary, unsigned needed, const char* who);

/// Partial derivatives of a scalar coefficient with respect to the
/// statistics in LambdaSummary.
struct SummaryGradient {
  double mean_x = 0.0;
  double mean_gamma = 0.0;
  double second_moment = 0.0;
};

struct Partials {
  double dx = 0.0;
  double dgamma = 0.0;
  double dalpha0 = 0.0;
  double dalpha = 0.0;
  SummaryGradient dlambda;
};

class ActionSet {
 public:
  static ActionSet whole_line() { return ActionSet(); }
  static ActionSet box(double lower, double upper);

  double project(double a) const;
  bool contains(double a) const { return a >= lower_ && a <= upper_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  bool bounded() const noexcept;

 private:
  ActionSet();
  double lower_;
  double upper_;
};

/// Piecewise-constant volatility sigma_t.
class SigmaSchedule {
 public:
  static SigmaSchedule constant(double value);
  /// `starts` strictly increasing with starts[0] == 0; value[i] holds on
  /// [starts[i], starts[i+1]).
  static SigmaSchedule piecewise(std::vector<double> starts, std::vector<double> values);

  double at(double t) const;
  /// integral of sigma_s^2 over [a, b].
  double integrated_variance(double a, double b) const;
  const std::vector<double>& starts() const noexcept { return starts_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> starts_;
  std::vector<double> values_;
};

struct State {
  double t = 0.0;
  double x = 0.0;
  double gamma = 0.0;
};

/// Adjoints: (P, Pgrave) for the major player, (Y, Ygrave) for the minor.
struct AdjointState {
  double P = 0.0;
  double Pgrave = 0.0;
  double Y = 0.0;
  double Ygrave = 0.0;
};

/// X_0 ~ N(x_mean, x_std^2), gamma_0 deterministic.
struct InitialCondition {
  double x_mean = 0.0;
  double x_std = 0.0;
  double gamma = 0.0;
};

/// Samples of (X, gamma, P, Pgrave) on common particles at one time.
struct JointView {
  std::span<const double> x;
  std::span<const double> gamma;
  std::span<const double> P;
  std::span<const double> Pgrave;
};

/// Closed-form equilibrium quantities as functions of time.
struct AnalyticOracle {
  std::function<double(double)> alpha0;
  std::function<double(double)> alpha;
  std::function<double(double)> mean_gamma;
};

/// Marks models whose adjoints are deterministic so that the equilibrium
/// means solve a closed ODE system. Covers the family
///   f0 = alpha0^2 / (2 D) + kappa alpha0 mean_x,  D = mean_gamma or 1,
///   b = alpha - alpha0 - sigma^2/2, f = alpha^2 alpha0^2 / 2, g = -x,
///   g0 = -mean_x + mean_gamma.
struct MeanFieldReduction {
  bool divide_by_mean_gamma = false;
  double kappa = 0.0;
};

struct ModelSpec {
  std::string name;
  std::vector<std::pair<std::string, double>> params;
  double horizon = 1.0;
  SigmaSchedule sigma = SigmaSchedule::constant(0.2);
  ActionSet major_actions = ActionSet::whole_line();
  ActionSet minor_actions = ActionSet::whole_line();
  InitialCondition initial;
  unsigned major_reads = 0;
  unsigned minor_reads = 0;

  // Minor state drift b and volatility sigma.
  std::function<double(const State&, double a0, double a, const LambdaSummary&)> drift;
  std::function<Partials(const State&, double a0, double a, const LambdaSummary&)> drift_partials;
  std::function<double(const State&)> vol;
  bool vol_state_dependent = false;

  // Major costs f0, g0.
  std::function<double(double t, double a0, const LambdaSummary&)> run_cost_major;
  std::function<Partials(double t, double a0, const LambdaSummary&)> run_cost_major_partials;
  std::function<double(const LambdaSummary&)> term_cost_major;
  std::function<SummaryGradient(const LambdaSummary&)> term_cost_major_partials;

  // Minor costs f, g.
  std::function<double(const State&, double a0, double a, const LambdaSummary&)> run_cost_minor;
  std::function<Partials(const State&, double a0, double a, const LambdaSummary&)>
      run_cost_minor_partials;
  std::function<double(double x, double gamma, const LambdaSummary&)> term_cost_minor;
  std::function<Partials(double x, double gamma, const LambdaSummary&)> term_cost_minor_partials;

  // Strong-convexity constants of the reduced Hamiltonians in alpha0 and alpha.
  std::function<double(const LambdaSummary&)> convexity_major;
  std::function<double(double a0)> convexity_minor;

  // Optional closed-form minimizers.
  std::function<double(double t, const JointView&, const LambdaSummary&)> analytic_alpha0;
  std::function<double(const State&, const AdjointState&, double a0, const LambdaSummary&)>
      analytic_alpha;

  std::optional<AnalyticOracle> oracle;
  std::optional<MeanFieldReduction> reduction;

  /// Throws PreconditionError when a required coefficient is missing.
  void validate() const;
  double param(const std::string& key, double fallback) const;
};

struct ExampleOptions {
  SigmaSchedule sigma = SigmaSchedule::constant(0.2);
  double horizon = 1.0;
  InitialCondition initial;
};

ModelSpec make_example1(const ExampleOptions& opts = {});
ModelSpec make_example2(const ExampleOptions& opts = {});
/// kappa scales the alpha0 * mean_x coupling; kappa = 1 is the reference model.
ModelSpec make_example3(double kappa = 1.0, const ExampleOptions& opts = {});

/// Lookup by name ("example1" | "example2" | "example3").
ModelSpec make_model(const std::string& name, double kappa, const ExampleOptions& opts);

}  // namespace mmfg
