#include "mmfg/fbsde.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mmfg/errors.hpp"
#include "mmfg/parallel.hpp"
#include "mmfg/simd.hpp"

namespace mmfg {

void SolverConfig::validate() const {
  std::vector<std::string> bad;
  if (particles < 2) bad.emplace_back("solver.particles");
  if (steps < 1) bad.emplace_back("solver.steps");
  if (!(t_min >= 0.0) || !std::isfinite(t_min)) bad.emplace_back("solver.t_min");
  if (degree < 0 || degree > 8) bad.emplace_back("solver.degree");
  if (threads < 1) bad.emplace_back("solver.threads");
  if (picard.max_iter < 1) bad.emplace_back("solver.picard_max_iter");
  if (!(picard.tol > 0.0)) bad.emplace_back("solver.picard_tol");
  if (!(picard.damping > 0.0 && picard.damping <= 1.0)) bad.emplace_back("solver.picard_damping");
  if (ode_substeps < 1) bad.emplace_back("solver.ode_substeps");
  if (!bad.empty()) {
    std::string list;
    for (const auto& k : bad) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("invalid solver settings: " + list, bad);
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

Noise make_noise(std::size_t particles, const TimeGrid& grid, std::uint64_t seed,
                 std::uint64_t stream_offset) {
  Noise noise;
  noise.z0.resize(particles);
  noise.dW.assign(grid.steps, std::vector<double>(particles));
  const double sqrt_dt = std::sqrt(grid.dt());
  for (std::size_t i = 0; i < particles; ++i) {
    std::mt19937_64 rng(derive_seed(seed, stream_offset, i));
    std::normal_distribution<double> normal;
    noise.z0[i] = normal(rng);
    for (std::size_t n = 0; n < grid.steps; ++n) noise.dW[n][i] = sqrt_dt * normal(rng);
  }
  return noise;
}

StartupState analytic_startup(const ModelSpec& model, double t_min, std::size_t substeps) {
  if (t_min == 0.0) {
    return {model.initial.x_mean, model.initial.x_std * model.initial.x_std, model.initial.gamma};
  }
  if (!model.reduction) {
    throw PreconditionError("model '" + model.name +
                            "' has no closed-form startup; use t_min = 0");
  }
  const auto ode = mean_field_ode_solve(model, TimeGrid::make(t_min, model.horizon, 200), substeps);
  return ode.startup;
}

Strategies constant_strategies(const TimeGrid& grid, std::size_t particles, double a0, double a) {
  Strategies s;
  s.alpha0.assign(grid.size(), a0);
  s.alpha.assign(grid.size(), std::vector<double>(particles, a));
  return s;
}

double strategy_distance(const Strategies& a, const Strategies& b) {
  if (a.alpha0.size() != b.alpha0.size() || a.alpha.size() != b.alpha.size()) {
    throw PreconditionError("strategy_distance: shapes differ");
  }
  double d = simd::max_abs_diff(a.alpha0, b.alpha0);
  for (std::size_t n = 0; n < a.alpha.size(); ++n) {
    d = std::max(d, simd::max_abs_diff(a.alpha[n], b.alpha[n]));
    if (std::isnan(d)) return d;
  }
  return d;
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

}  // namespace

FBSDEPaths simulate_forward(const ModelSpec& model, const TimeGrid& grid,
                            std::span<const double> alpha0, const Feedback& feedback,
                            const Noise& noise, const StartupState& start,
                            const std::vector<LambdaSummary>* frozen_lambda, std::size_t threads) {
  const std::size_t N = noise.z0.size();
  const std::size_t M = grid.steps;
  if (N == 0) throw PreconditionError("simulate_forward: no particles");
  if (noise.dW.size() != M) throw PreconditionError("simulate_forward: noise does not match grid");
  if (alpha0.size() != grid.size()) {
    throw PreconditionError("simulate_forward: alpha0 must have one value per grid time");
  }
  if (frozen_lambda && frozen_lambda->size() != grid.size()) {
    throw PreconditionError("simulate_forward: frozen statistics do not match grid");
  }

  FBSDEPaths p;
  p.grid = grid;
  p.particles = N;
  p.X.assign(grid.size(), std::vector<double>(N));
  p.gamma.assign(grid.size(), std::vector<double>(N));
  p.alpha.assign(grid.size(), std::vector<double>(N));
  p.alpha0.assign(alpha0.begin(), alpha0.end());
  p.minor_lambda.resize(grid.size());

  const double sd = std::sqrt(start.var_x);
  for (std::size_t i = 0; i < N; ++i) {
    p.X[0][i] = sd > 0.0 ? start.mean_x + sd * noise.z0[i] : start.mean_x;
    p.gamma[0][i] = start.gamma;
  }

  const double dt = grid.dt();
  std::vector<double> drift(N), vol(N);
  for (std::size_t n = 0; n <= M; ++n) {
    const double t = grid.time(n);
    const LambdaSummary lambda =
        frozen_lambda ? (*frozen_lambda)[n] : summarize(p.X[n], p.gamma[n]);
    p.minor_lambda[n] = lambda;
    const auto& xn = p.X[n];
    const auto& gn = p.gamma[n];
    auto& an = p.alpha[n];
    parallel_for(N, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) an[i] = feedback(n, i, t, xn[i], gn[i], lambda);
    });
    if (!all_finite(an)) throw DivergenceError("non-finite minor action", n);
    if (n == M) break;

    parallel_for(N, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const State s{t, xn[i], gn[i]};
        drift[i] = model.drift(s, alpha0[n], an[i], lambda);
        vol[i] = model.vol(s);
      }
    });
    p.X[n + 1] = xn;
    simd::euler_update(p.X[n + 1], drift, vol, noise.dW[n], dt);
    p.gamma[n + 1] = gn;
    simd::axpy(p.gamma[n + 1], dt, an);
    if (!all_finite(p.X[n + 1]) || !all_finite(p.gamma[n + 1])) {
      throw DivergenceError("state overflow at step " + std::to_string(n + 1), n + 1);
    }
  }
  return p;
}

void solve_backward(const ModelSpec& model, FBSDEPaths& p, int degree, bool minor_only,
                    std::size_t threads) {
  if (model.vol_state_dependent) {
    throw PreconditionError("solve_backward: state-dependent volatility needs the martingale "
                            "integrands, which this solver does not estimate");
  }
  const std::size_t N = p.particles;
  const std::size_t M = p.grid.steps;
  if (p.X.size() != p.grid.size() || p.alpha.size() != p.grid.size()) {
    throw PreconditionError("solve_backward: forward paths are incomplete");
  }
  p.P.assign(p.grid.size(), std::vector<double>(N, 0.0));
  p.Pgrave.assign(p.grid.size(), std::vector<double>(N, 0.0));
  p.Y.assign(p.grid.size(), std::vector<double>(N, 0.0));
  p.Ygrave.assign(p.grid.size(), std::vector<double>(N, 0.0));
  p.fits.assign(p.grid.size(), AdjointFits{PolyFit::constant(0.0), PolyFit::constant(0.0),
                                           PolyFit::constant(0.0), PolyFit::constant(0.0)});
  p.regression_r2.assign(p.grid.size(), 1.0);

  std::vector<double> tP(N), tPg(N), tY(N), tYg(N);

  auto regress = [&](std::size_t n) {
    const auto& x = p.X[n];
    const auto& g = p.gamma[n];
    std::vector<double>* outs[4] = {&p.P[n], &p.Pgrave[n], &p.Y[n], &p.Ygrave[n]};
    const std::vector<double>* targets[4] = {&tP, &tPg, &tY, &tYg};
    double r2 = 1.0;
    for (int k = minor_only ? 2 : 0; k < 4; ++k) {
      p.fits[n][k] = fit_poly(x, g, *targets[k], degree);
      p.fits[n][k].evaluate(x, g, *outs[k]);
      r2 = std::min(r2, p.fits[n][k].r2);
    }
    p.regression_r2[n] = r2;
  };

  // Terminal conditions.
  {
    const auto& x = p.X[M];
    const auto& g = p.gamma[M];
    if (!minor_only) {
      const LambdaSummary lt = summarize(x, g);
      const SummaryGradient dg0 = model.term_cost_major_partials(lt);
      for (std::size_t i = 0; i < N; ++i) {
        tP[i] = dg0.mean_x + 2.0 * x[i] * dg0.second_moment;
        tPg[i] = dg0.mean_gamma + 2.0 * g[i] * dg0.second_moment;
      }
    }
    for (std::size_t i = 0; i < N; ++i) {
      const Partials dgm = model.term_cost_minor_partials(x[i], g[i], p.minor_lambda[M]);
      tY[i] = dgm.dx;
      tYg[i] = dgm.dgamma;
    }
    regress(M);
  }

  const double dt = p.grid.dt();
  std::vector<double> dbP(N);
  for (std::size_t step = M; step-- > 0;) {
    const std::size_t n = step;
    const double t = p.grid.time(n);
    const auto& x = p.X[n];
    const auto& g = p.gamma[n];
    const auto& a = p.alpha[n];
    const double a0 = p.alpha0[n];
    const LambdaSummary& ml = p.minor_lambda[n];

    // Mean-field part of the major drift: chain rule through the statistics
    // that f0 reads, evaluated on the current (controlled) ensemble.
    SummaryGradient c;
    if (!minor_only) {
      const LambdaSummary lm = summarize(x, g);
      c = model.run_cost_major_partials(t, a0, lm).dlambda;
    }
    const auto& Pn1 = p.P[n + 1];
    const auto& Pgn1 = p.Pgrave[n + 1];
    const auto& Yn1 = p.Y[n + 1];
    const auto& Ygn1 = p.Ygrave[n + 1];
    parallel_for(N, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const State s{t, x[i], g[i]};
        const Partials db = model.drift_partials(s, a0, a[i], ml);
        const Partials df = model.run_cost_minor_partials(s, a0, a[i], ml);
        tY[i] = Yn1[i] + dt * (db.dx * Yn1[i] + df.dx);
        tYg[i] = Ygn1[i] + dt * (db.dgamma * Yn1[i] + df.dgamma);
        if (!minor_only) {
          tP[i] = Pn1[i] + dt * (db.dx * Pn1[i] + (c.mean_x + 2.0 * x[i] * c.second_moment));
          tPg[i] = Pgn1[i] + dt * (db.dgamma * Pn1[i] + (c.mean_gamma + 2.0 * g[i] * c.second_moment));
        }
      }
    });
    regress(n);
    for (const auto* v : {&p.P[n], &p.Pgrave[n], &p.Y[n], &p.Ygrave[n]}) {
      if (!all_finite(*v)) throw DivergenceError("non-finite adjoint", n);
    }
  }
}

SolveContext make_context(const ModelSpec& model, const SolverConfig& config) {
  config.validate();
  model.validate();
  SolveContext ctx;
  ctx.grid = config.grid(model);
  ctx.noise = make_noise(config.particles, ctx.grid, config.seed);
  ctx.startup = analytic_startup(model, config.t_min, config.ode_substeps);
  return ctx;
}

Strategies minimize_strategies(const ModelSpec& model, const FBSDEPaths& p, MinimizerMode mode,
                               std::size_t threads) {
  Strategies s;
  s.alpha0.resize(p.grid.size());
  s.alpha.assign(p.grid.size(), std::vector<double>(p.particles));
  for (std::size_t n = 0; n < p.grid.size(); ++n) {
    const double t = p.grid.time(n);
    const double a0 = minimize_alpha0(model, t, p.joint(n), p.alpha[n], mode);
    s.alpha0[n] = a0;
    auto& out = s.alpha[n];
    parallel_for(p.particles, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const State st{t, p.X[n][i], p.gamma[n][i]};
        const AdjointState adj{p.P[n][i], p.Pgrave[n][i], p.Y[n][i], p.Ygrave[n][i]};
        out[i] = minimize_alpha(model, st, adj, a0, p.minor_lambda[n], mode);
      }
    });
  }
  return s;
}

namespace {

Feedback table_feedback(const Strategies& s) {
  return [&s](std::size_t n, std::size_t i, double, double, double, const LambdaSummary&) {
    return s.alpha[n][i];
  };
}

std::vector<LambdaSummary> flow_summaries(const MeasureFlow& mu) {
  std::vector<LambdaSummary> out;
  out.reserve(mu.size());
  for (const auto& e : mu.ensembles()) out.push_back(summarize(e));
  return out;
}

}  // namespace

MeasureFlow uncontrolled_flow(const ModelSpec& model, const SolveContext& ctx,
                              std::size_t threads) {
  const Strategies s = constant_strategies(ctx.grid, ctx.noise.z0.size(),
                                           model.major_actions.project(0.0),
                                           model.minor_actions.project(0.0));
  return simulate_forward(model, ctx.grid, s.alpha0, table_feedback(s), ctx.noise, ctx.startup,
                          nullptr, threads)
      .flow();
}

FBSDEPaths picard_solve(const ModelSpec& model, const SolverConfig& config, const MeasureFlow& mu,
                        const SolveContext& ctx, const Strategies* warm_start) {
  config.validate();
  if (mu.grid() != ctx.grid.times()) {
    throw PreconditionError("picard_solve: measure flow is not on the solver grid");
  }
  if (mu.at(0).count() == 0 || mu.at(0).dim() != 2) {
    throw PreconditionError("picard_solve: measure flow must live on (x, gamma)");
  }
  const std::size_t N = ctx.noise.z0.size();
  const auto frozen = flow_summaries(mu);

  auto sweep = [&](const Strategies& s) {
    FBSDEPaths p = simulate_forward(model, ctx.grid, s.alpha0, table_feedback(s), ctx.noise,
                                    ctx.startup, &frozen, config.threads);
    solve_backward(model, p, config.degree, false, config.threads);
    return p;
  };

  Strategies s;
  if (warm_start) {
    if (warm_start->alpha0.size() != ctx.grid.size() || warm_start->alpha.size() != ctx.grid.size() ||
        warm_start->alpha.front().size() != N) {
      throw PreconditionError("picard_solve: warm start has the wrong shape");
    }
    s = *warm_start;
  } else {
    const Strategies zero = constant_strategies(ctx.grid, N, model.major_actions.project(0.0),
                                                model.minor_actions.project(0.0));
    const FBSDEPaths p0 = sweep(zero);
    check_major_separability(model, ctx.grid.time(ctx.grid.steps / 2), p0.joint(ctx.grid.steps / 2),
                             p0.alpha[ctx.grid.steps / 2]);
    s = minimize_strategies(model, p0, config.minimizer, config.threads);
  }

  std::vector<double> residuals;
  for (std::size_t k = 1; k <= config.picard.max_iter; ++k) {
    FBSDEPaths p = sweep(s);
    const Strategies next = minimize_strategies(model, p, config.minimizer, config.threads);
    const double r = strategy_distance(next, s);
    residuals.push_back(r);
    if (std::isnan(r)) break;
    if (r <= config.picard.tol) {
      p.picard_residuals = residuals;
      p.picard_iterations = k;
      return p;
    }
    const double rho = config.picard.damping;
    simd::mix(s.alpha0, s.alpha0, next.alpha0, rho);
    for (std::size_t n = 0; n < s.alpha.size(); ++n) simd::mix(s.alpha[n], s.alpha[n], next.alpha[n], rho);
  }
  throw NonConvergenceError("picard_solve: strategy residual above tol after " +
                                std::to_string(residuals.size()) + " iterations",
                            residuals);
}

FBSDEPaths picard_solve(const ModelSpec& model, const SolverConfig& config, const MeasureFlow& mu) {
  const SolveContext ctx = make_context(model, config);
  return picard_solve(model, config, mu, ctx);
}

double MinorPolicy::action(const ModelSpec& model, std::size_t n, double x, double gamma) const {
  const State s{grid.time(n), x, gamma};
  const AdjointState adj{0.0, 0.0, Y.at(n)(x, gamma), Ygrave.at(n)(x, gamma)};
  return minimize_alpha(model, s, adj, alpha0.at(n), lambda.at(n));
}

MinorPolicy solve_minor_best_response(const ModelSpec& model, const SolverConfig& config,
                                      const TimeGrid& grid, std::span<const double> alpha0,
                                      const std::vector<LambdaSummary>& lambda,
                                      const StartupState& start) {
  config.validate();
  if (alpha0.size() != grid.size() || lambda.size() != grid.size()) {
    throw PreconditionError("best response: frozen inputs do not match the grid");
  }
  const std::size_t N = config.particles;
  const Noise noise = make_noise(N, grid, derive_seed(config.seed, 0x62725f6e6f697365ULL));

  auto sweep = [&](const Strategies& s) {
    FBSDEPaths p = simulate_forward(model, grid, alpha0, table_feedback(s), noise, start, &lambda,
                                    config.threads);
    solve_backward(model, p, config.degree, true, config.threads);
    return p;
  };
  auto minimize = [&](const FBSDEPaths& p) {
    Strategies s;
    s.alpha0.assign(alpha0.begin(), alpha0.end());
    s.alpha.assign(grid.size(), std::vector<double>(N));
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const double t = grid.time(n);
      parallel_for(N, config.threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
          const State st{t, p.X[n][i], p.gamma[n][i]};
          const AdjointState adj{0.0, 0.0, p.Y[n][i], p.Ygrave[n][i]};
          s.alpha[n][i] = minimize_alpha(model, st, adj, alpha0[n], lambda[n], config.minimizer);
        }
      });
    }
    return s;
  };
  auto policy_from = [&](const FBSDEPaths& p) {
    MinorPolicy pol;
    pol.grid = grid;
    pol.alpha0.assign(alpha0.begin(), alpha0.end());
    pol.lambda = lambda;
    for (std::size_t n = 0; n < grid.size(); ++n) {
      pol.Y.push_back(p.fits[n][2]);
      pol.Ygrave.push_back(p.fits[n][3]);
    }
    return pol;
  };

  Strategies s = constant_strategies(grid, N, 0.0, model.minor_actions.project(0.0));
  s.alpha0.assign(alpha0.begin(), alpha0.end());
  s = minimize(sweep(s));
  std::vector<double> residuals;
  for (std::size_t k = 1; k <= config.picard.max_iter; ++k) {
    const FBSDEPaths p = sweep(s);
    const Strategies next = minimize(p);
    const double r = strategy_distance(next, s);
    residuals.push_back(r);
    if (std::isnan(r)) break;
    if (r <= config.picard.tol) return policy_from(p);
    for (std::size_t n = 0; n < s.alpha.size(); ++n) {
      simd::mix(s.alpha[n], s.alpha[n], next.alpha[n], config.picard.damping);
    }
  }
  throw NonConvergenceError("best response: minor Picard iteration did not converge", residuals);
}

}  // namespace mmfg
