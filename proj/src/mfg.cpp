#include "mmfg/mfg.hpp"

#include <cmath>
#include <string>

#include "mmfg/errors.hpp"
#include "mmfg/simd.hpp"

namespace mmfg {

void MFGConfig::validate() const {
  solver.validate();
  std::vector<std::string> bad;
  if (!(fp_tol > 0.0)) bad.emplace_back("mfg.fp_tol");
  if (!(damping > 0.0 && damping <= 1.0)) bad.emplace_back("mfg.damping");
  if (max_iter < 1) bad.emplace_back("mfg.max_iter");
  if (!bad.empty()) {
    std::string list;
    for (const auto& k : bad) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("invalid fixed-point settings: " + list, bad);
  }
}

namespace {

void mix_flow(MeasureFlow& mu, const MeasureFlow& nu, double rho) {
  for (std::size_t n = 0; n < mu.size(); ++n) {
    auto& e = mu.ensembles()[n];
    for (std::size_t j = 0; j < e.dim(); ++j) simd::mix(e.coord(j), e.coord(j), nu.at(n).coord(j), rho);
  }
}

}  // namespace

MFGSolution solve_mmmfg(const ModelSpec& model, const MFGConfig& config) {
  config.validate();
  const SolveContext ctx = make_context(model, config.solver);
  MeasureFlow mu = uncontrolled_flow(model, ctx, config.solver.threads);

  std::vector<double> residuals;
  std::size_t inner = 0;
  Strategies warm;
  bool have_warm = false;
  for (std::size_t j = 0; j < config.max_iter; ++j) {
    FBSDEPaths paths = picard_solve(model, config.solver, mu, ctx, have_warm ? &warm : nullptr);
    inner += paths.picard_iterations;
    MeasureFlow nu = paths.flow();
    const double r = flow_distance(mu, nu);
    residuals.push_back(r);
    if (r <= config.fp_tol) {
      MFGSolution sol{std::move(mu), paths.alpha0, std::move(paths), residuals, j, inner,
                      ctx.startup};
      return sol;
    }
    warm = Strategies{paths.alpha0, paths.alpha};
    have_warm = true;
    // The uncontrolled starting flow carries no information about the
    // equilibrium, so the first update replaces it outright.
    mix_flow(mu, nu, j == 0 ? 1.0 : config.damping);
  }
  throw NonConvergenceError("solve_mmmfg: flow residual above fp_tol after " +
                                std::to_string(config.max_iter) + " outer iterations",
                            residuals);
}

FixedPointCertificate certify_fixed_point(const ModelSpec& model, const MFGConfig& config,
                                          const MFGSolution& solution) {
  const SolveContext ctx = make_context(model, config.solver);
  const Strategies s{solution.fbsde.alpha0, solution.fbsde.alpha};
  std::vector<LambdaSummary> frozen;
  for (const auto& e : solution.equilibrium_flow.ensembles()) frozen.push_back(summarize(e));
  const Feedback fb = [&s](std::size_t n, std::size_t i, double, double, double,
                           const LambdaSummary&) { return s.alpha[n][i]; };
  FBSDEPaths p = simulate_forward(model, ctx.grid, s.alpha0, fb, ctx.noise, ctx.startup, &frozen,
                                  config.solver.threads);
  solve_backward(model, p, config.solver.degree, false, config.solver.threads);
  const Strategies next = minimize_strategies(model, p, config.solver.minimizer, config.solver.threads);
  FixedPointCertificate c;
  c.strategy_change = strategy_distance(next, s);
  c.flow_change = flow_distance(p.flow(), solution.equilibrium_flow);
  c.passed = c.strategy_change <= 2.0 * config.solver.picard.tol &&
             c.flow_change <= 2.0 * config.fp_tol;
  return c;
}

DecouplingFields fit_decoupling_fields(const MFGSolution& solution, int degree) {
  const FBSDEPaths& p = solution.fbsde;
  DecouplingFields f;
  f.degree = degree;
  f.grid = p.grid;
  for (std::size_t n = 0; n < p.grid.size(); ++n) {
    f.P.push_back(fit_poly(p.X[n], p.gamma[n], p.P[n], degree));
    f.Pgrave.push_back(fit_poly(p.X[n], p.gamma[n], p.Pgrave[n], degree));
    f.Y.push_back(fit_poly(p.X[n], p.gamma[n], p.Y[n], degree));
    f.Ygrave.push_back(fit_poly(p.X[n], p.gamma[n], p.Ygrave[n], degree));
    f.residual.push_back(std::max({f.P.back().rms_residual, f.Pgrave.back().rms_residual,
                                   f.Y.back().rms_residual, f.Ygrave.back().rms_residual}));
  }
  return f;
}

double EquilibriumBundle::minor_action(const ModelSpec& model, std::size_t n, double x,
                                       double gamma, double alpha0_n) const {
  const State s{grid.time(n), x, gamma};
  const AdjointState adj{0.0, 0.0, fields.theta_Y(n, x, gamma), fields.theta_Ygrave(n, x, gamma)};
  return minimize_alpha(model, s, adj, alpha0_n, flow_summaries.at(n));
}

EquilibriumBundle export_equilibrium(const ModelSpec& model, const MFGSolution& solution,
                                     const DecouplingFields& fields,
                                     const std::string& config_echo) {
  EquilibriumBundle b;
  b.model = model.name;
  b.params = model.params;
  b.config_echo = config_echo;
  b.grid = solution.fbsde.grid;
  b.alpha0 = solution.alpha0;
  b.fields = fields;
  for (const auto& e : solution.equilibrium_flow.ensembles()) b.flow_summaries.push_back(summarize(e));
  b.startup = solution.startup;
  return b;
}

}  // namespace mmfg
