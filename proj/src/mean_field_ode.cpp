#include <cmath>
#include <string>

#include "mmfg/errors.hpp"
#include "mmfg/fbsde.hpp"

namespace mmfg {
namespace {

// (E[gamma], E[X], E[P], q) with q' = -d f0 / d mean_gamma, so that
// E[Pgrave_t] = Pgrave_T - (q_T - q_t).
struct OdeState {
  double mg, mx, p, q;
};

OdeState axpy(const OdeState& y, double h, const OdeState& k) {
  return {y.mg + h * k.mg, y.mx + h * k.mx, y.p + h * k.p, y.q + h * k.q};
}

class Reduced {
 public:
  explicit Reduced(const ModelSpec& m) : m_(m), div_(m.reduction->divide_by_mean_gamma),
                                         kappa_(m.reduction->kappa) {
    const LambdaSummary l0 = lambda(m.initial.x_mean, m.initial.gamma);
    const Partials g = m.term_cost_minor_partials(m.initial.x_mean, m.initial.gamma, l0);
    Y_ = g.dx;
    Ygrave_ = g.dgamma;
    ysum_ = -(Y_ + Ygrave_);
    if (!(ysum_ > 0.0)) {
      throw PreconditionError("mean-field ODE: minor adjoints give a non-positive action rate");
    }
  }

  static LambdaSummary lambda(double mx, double mg) {
    LambdaSummary l;
    l.mean_x = mx;
    l.mean_gamma = mg;
    l.available = kMeanX | kMeanGamma;
    return l;
  }

  double alpha0(const OdeState& y) const {
    double d = 1.0;
    if (div_) {
      if (!(y.mg > kMeanFloor)) {
        throw SingularMeanError("mean-field ODE: E[gamma] = " + std::to_string(y.mg) +
                                " reached the mean floor");
      }
      d = y.mg;
    }
    return m_.major_actions.project((y.p - kappa_ * y.mx) * d);
  }

  double alpha(double t, const OdeState& y, double a0) const {
    const AdjointState adj{y.p, 0.0, Y_, Ygrave_};
    return m_.analytic_alpha(State{t, y.mx, y.mg}, adj, a0, lambda(y.mx, y.mg));
  }

  OdeState rhs(double t, const OdeState& y) const {
    const double a0 = alpha0(y);
    const double a = alpha(t, y, a0);
    const LambdaSummary l = lambda(y.mx, y.mg);
    const double b = m_.drift(State{t, y.mx, y.mg}, a0, a, l);
    const SummaryGradient c = m_.run_cost_major_partials(t, a0, l).dlambda;
    return {a, b, -c.mean_x, -c.mean_gamma};
  }

  OdeState rk4(double t, const OdeState& y, double h) const {
    const OdeState k1 = rhs(t, y);
    const OdeState k2 = rhs(t + 0.5 * h, axpy(y, 0.5 * h, k1));
    const OdeState k3 = rhs(t + 0.5 * h, axpy(y, 0.5 * h, k2));
    const OdeState k4 = rhs(t + h, axpy(y, h, k3));
    return {y.mg + h / 6.0 * (k1.mg + 2.0 * k2.mg + 2.0 * k3.mg + k4.mg),
            y.mx + h / 6.0 * (k1.mx + 2.0 * k2.mx + 2.0 * k3.mx + k4.mx),
            y.p + h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
            y.q + h / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q)};
  }

  // Closed-form solution on [0, t_min] with the major adjoint frozen at its
  // initial value, exact as t_min -> 0.
  OdeState startup(double p0, double t_min, StartupState& law) const {
    const double x0 = m_.initial.x_mean;
    const double g0 = m_.initial.gamma;
    const double half_var = 0.5 * m_.sigma.integrated_variance(0.0, t_min);
    law.var_x = m_.initial.x_std * m_.initial.x_std + m_.sigma.integrated_variance(0.0, t_min);
    if (t_min == 0.0) {
      law.mean_x = x0;
      law.gamma = g0;
      return {g0, x0, p0, 0.0};
    }
    const double c = p0 - kappa_ * x0;
    if (!(std::fabs(c) > kMeanFloor)) {
      throw SingularControlError("mean-field ODE: major action vanishes at t = 0");
    }
    OdeState y{};
    if (div_) {
      const double mg = std::cbrt(g0 * g0 * g0 + 3.0 * ysum_ * t_min / (c * c));
      const double int_mg = c * c / (4.0 * ysum_) * (mg * mg * mg * mg - g0 * g0 * g0 * g0);
      y = {mg, x0 + (mg - g0) - c * int_mg - half_var, p0 - kappa_ * c * int_mg, 0.0};
    } else {
      const double rate = ysum_ / (c * c);
      y = {g0 + rate * t_min, x0 + rate * t_min - c * t_min - half_var, p0 - kappa_ * c * t_min,
           0.0};
    }
    law.mean_x = y.mx;
    law.gamma = y.mg;
    return y;
  }

  double Y() const { return Y_; }
  double Ygrave() const { return Ygrave_; }

 private:
  const ModelSpec& m_;
  bool div_;
  double kappa_;
  double Y_ = 0.0, Ygrave_ = 0.0, ysum_ = 1.0;
};

struct Run {
  std::vector<OdeState> states;
  StartupState law;
};

Run integrate(const Reduced& r, const TimeGrid& grid, std::size_t substeps, double p0) {
  Run run;
  run.states.reserve(grid.size());
  OdeState y = r.startup(p0, grid.t_min, run.law);
  run.states.push_back(y);
  const double h = grid.dt() / static_cast<double>(substeps);
  for (std::size_t n = 0; n < grid.steps; ++n) {
    const double t0 = grid.time(n);
    for (std::size_t k = 0; k < substeps; ++k) y = r.rk4(t0 + static_cast<double>(k) * h, y, h);
    run.states.push_back(y);
  }
  return run;
}

}  // namespace

MeanFieldOdeResult mean_field_ode_solve(const ModelSpec& model, const TimeGrid& grid,
                                        std::size_t substeps) {
  if (!model.reduction) {
    throw PreconditionError("model '" + model.name + "' does not reduce to a mean-field ODE");
  }
  if (!model.analytic_alpha) {
    throw PreconditionError("mean-field ODE needs the closed-form minor minimizer");
  }
  if (substeps < 1) throw PreconditionError("mean-field ODE: substeps must be >= 1");
  const Reduced r(model);

  // Terminal major adjoints from g0; constant in the reducible family.
  const SummaryGradient dg0 = model.term_cost_major_partials(
      Reduced::lambda(model.initial.x_mean, model.initial.gamma));
  const double pT = dg0.mean_x;

  double p0 = pT;
  Run run = integrate(r, grid, substeps, p0);
  std::size_t iters = 1;
  auto miss = [&](const Run& rr) { return rr.states.back().p - pT; };
  double f_cur = miss(run);
  const double tol = 1e-13 * (1.0 + std::fabs(pT));
  if (std::fabs(f_cur) > tol) {
    // Secant on p0, halving steps that leave the domain of the vector field.
    double p_prev = p0;
    double f_prev = f_cur;
    double p_cur = p0 - f_cur;
    bool done = false;
    for (; iters < 100 && !done; ++iters) {
      try {
        run = integrate(r, grid, substeps, p_cur);
      } catch (const Error&) {
        p_cur = 0.5 * (p_cur + p_prev);
        continue;
      }
      f_cur = miss(run);
      if (std::fabs(f_cur) <= tol) {
        done = true;
        p0 = p_cur;
        break;
      }
      const double denom = f_cur - f_prev;
      const double p_next = denom != 0.0 ? p_cur - f_cur * (p_cur - p_prev) / denom : p_cur - f_cur;
      p_prev = p_cur;
      f_prev = f_cur;
      p_cur = p_next;
    }
    if (!done) {
      throw NonConvergenceError("mean-field ODE: shooting on the initial major adjoint failed",
                                {f_cur});
    }
    ++iters;
  }

  MeanFieldOdeResult out;
  out.p0 = p0;
  out.startup = run.law;
  out.shooting_iterations = iters;
  out.Y = r.Y();
  out.Ygrave = r.Ygrave();
  const double qT = run.states.back().q;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const OdeState& y = run.states[n];
    const double t = grid.time(n);
    const double a0 = r.alpha0(y);
    out.t.push_back(t);
    out.mean_gamma.push_back(y.mg);
    out.mean_x.push_back(y.mx);
    out.P.push_back(y.p);
    out.Pgrave.push_back(dg0.mean_gamma - (qT - y.q));
    out.alpha0.push_back(a0);
    out.alpha.push_back(r.alpha(t, y, a0));
  }
  return out;
}

}  // namespace mmfg
