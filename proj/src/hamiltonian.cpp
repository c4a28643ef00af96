#include "mmfg/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmfg/errors.hpp"
#include "mmfg/simd.hpp"

namespace mmfg {

double eval_H0R(const ModelSpec& model, const State& s, const AdjointState& adj, double a0,
                double a, const LambdaSummary& lambda) {
  require_statistics(lambda, model.major_reads, "H0R");
  return model.drift(s, a0, a, lambda) * adj.P + a * adj.Pgrave +
         model.run_cost_major(s.t, a0, lambda);
}

double eval_HR(const ModelSpec& model, const State& s, const AdjointState& adj, double a0,
               double a, const LambdaSummary& lambda) {
  require_statistics(lambda, model.minor_reads, "HR");
  return model.drift(s, a0, a, lambda) * adj.Y + a * adj.Ygrave +
         model.run_cost_minor(s, a0, a, lambda);
}

double dH0R_dalpha0(const ModelSpec& model, const State& s, const AdjointState& adj, double a0,
                    double a, const LambdaSummary& lambda) {
  require_statistics(lambda, model.major_reads, "H0R");
  return model.drift_partials(s, a0, a, lambda).dalpha0 * adj.P +
         model.run_cost_major_partials(s.t, a0, lambda).dalpha0;
}

double dHR_dalpha(const ModelSpec& model, const State& s, const AdjointState& adj, double a0,
                  double a, const LambdaSummary& lambda) {
  require_statistics(lambda, model.minor_reads, "HR");
  return model.drift_partials(s, a0, a, lambda).dalpha * adj.Y + adj.Ygrave +
         model.run_cost_minor_partials(s, a0, a, lambda).dalpha;
}

namespace {

void check_view(const JointView& v, std::span<const double> alpha) {
  const std::size_t n = v.x.size();
  if (n == 0) throw PreconditionError("joint ensemble is empty");
  if (v.gamma.size() != n || v.P.size() != n || v.Pgrave.size() != n || alpha.size() != n) {
    throw PreconditionError("joint ensemble arrays differ in length");
  }
}

}  // namespace

double mean_H0R(const ModelSpec& model, double t, const JointView& v, std::span<const double> alpha,
                double a0, const LambdaSummary& lambda) {
  check_view(v, alpha);
  require_statistics(lambda, model.major_reads, "H0R");
  std::vector<double> terms(v.x.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const State s{t, v.x[i], v.gamma[i]};
    terms[i] = model.drift(s, a0, alpha[i], lambda) * v.P[i] + alpha[i] * v.Pgrave[i];
  }
  return simd::mean(terms) + model.run_cost_major(t, a0, lambda);
}

double mean_dH0R_dalpha0(const ModelSpec& model, double t, const JointView& v,
                         std::span<const double> alpha, double a0, const LambdaSummary& lambda) {
  check_view(v, alpha);
  require_statistics(lambda, model.major_reads, "H0R");
  std::vector<double> terms(v.x.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const State s{t, v.x[i], v.gamma[i]};
    terms[i] = model.drift_partials(s, a0, alpha[i], lambda).dalpha0 * v.P[i];
  }
  return simd::mean(terms) + model.run_cost_major_partials(t, a0, lambda).dalpha0;
}

ScalarMinimum projected_gradient(const std::function<double(double)>& f,
                                 const std::function<double(double)>& df, const ActionSet& set,
                                 const MinimizerOptions& opts) {
  double x = set.project(0.0);
  double fx = f(x);
  double g = df(x);
  double step = 1.0;
  auto pg_norm = [&](double at, double grad) { return std::fabs(at - set.project(at - grad)); };

  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    const double pg = pg_norm(x, g);
    if (pg <= opts.grad_tol) return {x, pg, it};

    double s = step;
    double x_new = x;
    double f_new = fx;
    double g_new = g;
    bool accepted = false;
    for (int k = 0; k < 80; ++k) {
      x_new = set.project(x - s * g);
      f_new = f(x_new);
      const double decrease = opts.armijo * g * (x_new - x);
      if (f_new <= fx + decrease) {
        accepted = true;
        break;
      }
      // Near the optimum f differences drop below rounding; accept a step
      // that halves the slope without measurably increasing f.
      g_new = df(x_new);
      if (std::fabs(g_new) <= 0.5 * std::fabs(g) &&
          f_new <= fx + 1e-13 * (1.0 + std::fabs(fx))) {
        accepted = true;
        break;
      }
      s *= opts.shrink;
    }
    if (!accepted) {
      throw OptimizationFailure("projected gradient: line search failed", x, pg);
    }
    g_new = df(x_new);
    const double dx = x_new - x;
    const double dg = g_new - g;
    step = (dx * dg > 0.0) ? (dx * dx) / (dx * dg) : 1.0;
    x = x_new;
    fx = f_new;
    g = g_new;
  }
  const double pg = pg_norm(x, g);
  if (pg <= opts.grad_tol) return {x, pg, opts.max_iter};
  throw OptimizationFailure("projected gradient: no convergence after " +
                                std::to_string(opts.max_iter) + " iterations",
                            x, pg);
}

double minimize_alpha0(const ModelSpec& model, double t, const JointView& v,
                       std::span<const double> alpha, MinimizerMode mode,
                       const MinimizerOptions& opts) {
  check_view(v, alpha);
  const LambdaSummary lambda = summarize(v.x, v.gamma);
  const double convexity = model.convexity_major(lambda);
  if (!(convexity > 0.0)) {
    throw PreconditionError("minimize_alpha0: major Hamiltonian is not strongly convex here");
  }
  if (mode == MinimizerMode::automatic && model.analytic_alpha0) {
    return model.analytic_alpha0(t, v, lambda);
  }
  auto f = [&](double a0) { return mean_H0R(model, t, v, alpha, a0, lambda); };
  auto df = [&](double a0) { return mean_dH0R_dalpha0(model, t, v, alpha, a0, lambda); };
  return projected_gradient(f, df, model.major_actions, opts).argmin;
}

double minimize_alpha(const ModelSpec& model, const State& s, const AdjointState& adj, double a0,
                      const LambdaSummary& lambda, MinimizerMode mode,
                      const MinimizerOptions& opts) {
  const double convexity = model.convexity_minor(a0);
  if (!(convexity > kMeanFloor * kMeanFloor)) {
    throw SingularControlError("minimize_alpha: alpha0 = " + std::to_string(a0) +
                               " leaves the minor Hamiltonian without strong convexity");
  }
  if (mode == MinimizerMode::automatic && model.analytic_alpha) {
    return model.analytic_alpha(s, adj, a0, lambda);
  }
  auto f = [&](double a) { return eval_HR(model, s, adj, a0, a, lambda); };
  auto df = [&](double a) { return dHR_dalpha(model, s, adj, a0, a, lambda); };
  return projected_gradient(f, df, model.minor_actions, opts).argmin;
}

void check_major_separability(const ModelSpec& model, double t, const JointView& v,
                              std::span<const double> alpha) {
  check_view(v, alpha);
  const LambdaSummary lambda = summarize(v.x, v.gamma);
  constexpr double h = 1e-2;
  std::vector<double> shifted(alpha.begin(), alpha.end());
  for (double& a : shifted) a += h;
  for (double a0 : {-1.3, 0.2, 1.7}) {
    const double h00 = mean_H0R(model, t, v, alpha, a0, lambda);
    const double h10 = mean_H0R(model, t, v, alpha, a0 + h, lambda);
    const double h01 = mean_H0R(model, t, v, shifted, a0, lambda);
    const double h11 = mean_H0R(model, t, v, shifted, a0 + h, lambda);
    const double mixed = (h11 - h10 - h01 + h00) / (h * h);
    const double scale = 1.0 + std::fabs(h00);
    if (std::fabs(mixed) > 1e-6 * scale) {
      throw PreconditionError("major Hamiltonian is not separable in (alpha0, alpha): mixed "
                              "second difference " + std::to_string(mixed));
    }
  }
}

ActionGrid ActionGrid::uniform(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw PreconditionError("ActionGrid: invalid range");
  ActionGrid g;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  g.values.reserve(count);
  for (std::size_t k = 0; k < count; ++k) g.values.push_back(lo + static_cast<double>(k) * step);
  return g;
}

ActionGrid ActionGrid::offsets(std::vector<double> deltas) {
  ActionGrid g;
  g.values = std::move(deltas);
  g.relative = true;
  return g;
}

NecessaryConditionReport verify_necessary_conditions(
    const ModelSpec& model, const FBSDEPaths& paths, std::span<const double> alpha0,
    const std::vector<std::vector<double>>& alpha, const VerifyOptions& opts) {
  const std::size_t steps = paths.grid.size();
  if (alpha0.size() != steps || alpha.size() != steps || paths.minor_lambda.size() != steps) {
    throw PreconditionError("verify_necessary_conditions: strategies do not match the path grid");
  }
  if (opts.particle_stride == 0) throw PreconditionError("verify: particle stride must be >= 1");
  NecessaryConditionReport rep;
  rep.tolerance = opts.tolerance;

  for (std::size_t n = 0; n < steps; ++n) {
    const double t = paths.grid.time(n);
    const JointView v = paths.joint(n);
    const LambdaSummary lambda = summarize(v.x, v.gamma);

    if (!opts.major_grid.values.empty()) {
      const double at_hat = mean_H0R(model, t, v, alpha[n], alpha0[n], lambda);
      for (double c : opts.major_grid.values) {
        double a0 = opts.major_grid.relative ? alpha0[n] + c : c;
        a0 = model.major_actions.project(a0);
        const double viol = at_hat - mean_H0R(model, t, v, alpha[n], a0, lambda);
        if (viol > rep.major_violation) {
          rep.major_violation = viol;
          rep.major_time_index = n;
        }
      }
    }

    if (!opts.minor_grid.values.empty()) {
      const LambdaSummary& ml = paths.minor_lambda[n];
      for (std::size_t i = 0; i < paths.particles; i += opts.particle_stride) {
        const State s{t, paths.X[n][i], paths.gamma[n][i]};
        const AdjointState adj{paths.P[n][i], paths.Pgrave[n][i], paths.Y[n][i],
                               paths.Ygrave[n][i]};
        const double a_hat = alpha[n][i];
        const double at_hat = eval_HR(model, s, adj, alpha0[n], a_hat, ml);
        for (double c : opts.minor_grid.values) {
          double a = opts.minor_grid.relative ? a_hat + c : c;
          a = model.minor_actions.project(a);
          const double viol = at_hat - eval_HR(model, s, adj, alpha0[n], a, ml);
          if (viol > rep.minor_violation) {
            rep.minor_violation = viol;
            rep.minor_time_index = n;
            rep.minor_particle = i;
          }
        }
      }
    }
  }
  rep.max_violation = std::max(rep.major_violation, rep.minor_violation);
  rep.passed = rep.max_violation <= opts.tolerance;
  return rep;
}

}  // namespace mmfg
