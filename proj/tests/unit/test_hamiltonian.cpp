#include <cmath>
#include <random>

#include "doctest.h"
#include "mmfg/errors.hpp"
#include "mmfg/hamiltonian.hpp"
#include "mmfg/mfg.hpp"

using namespace mmfg;

namespace {

ExampleOptions quiet() {
  ExampleOptions o;
  o.sigma = SigmaSchedule::constant(0.0);
  return o;
}

LambdaSummary lam(double mx, double mg) { return LambdaSummary::of(mx, mg, 0.0); }

// Written out by hand from b = a - a0 - sigma^2/2 and the example costs.
double h0_reference(double y, double yg, double a0, double a, double sigma, double f0) {
  return (a - a0 - 0.5 * sigma * sigma) * y + a * yg + f0;
}
double h_reference(double y, double yg, double a0, double a, double sigma) {
  return (a - a0 - 0.5 * sigma * sigma) * y + a * yg + 0.5 * a * a * a0 * a0;
}

double grid_argmin(const std::function<double(double)>& f, double lo, double hi, double step) {
  double best = lo, best_val = f(lo);
  const auto n = static_cast<long>(std::llround((hi - lo) / step));
  for (long k = 1; k <= n; ++k) {
    const double a = lo + static_cast<double>(k) * step;
    const double v = f(a);
    if (v < best_val) {
      best_val = v;
      best = a;
    }
  }
  return best;
}

MFGSolution solved_example1() {
  MFGConfig c;
  c.solver.particles = 200;
  c.solver.steps = 20;
  c.solver.t_min = 0.0;
  return solve_mmmfg(make_example1(), c);
}

}  // namespace

TEST_CASE("reduced Hamiltonians on hand-evaluated inputs") {
  const ModelSpec m = make_example1(quiet());
  const AdjointState adj{-1.0, 1.0, -1.0, 0.0};
  const double h0 = eval_H0R(m, {0.0, 0.0, 0.0}, adj, -1.0, 1.0, lam(0, 1));
  CHECK(h0 == -0.5);
  CHECK(h0 == h0_reference(-1.0, 1.0, -1.0, 1.0, 0.0, 0.5));
  const double h = eval_HR(m, {0.0, 0.0, 0.0}, adj, -1.0, 1.0, lam(0, 1));
  CHECK(h == -1.5);
  CHECK(h == h_reference(-1.0, 0.0, -1.0, 1.0, 0.0));

  CHECK(eval_H0R(m, {}, {}, 0.0, 0.0, lam(0, 1)) == 0.0);
  CHECK(eval_HR(m, {}, {0, 0, 0, 3.7}, 0.0, 0.0, lam(0, 1)) == 0.0);

  const ModelSpec m2 = make_example2(quiet());
  CHECK(eval_H0R(m2, {}, adj, -1.0, 1.0, lam(0, 1)) == h0);
}

TEST_CASE("Hamiltonians reject summaries missing a statistic") {
  const ModelSpec m = make_example2();
  LambdaSummary partial;
  partial.available = kMeanX;
  CHECK_THROWS_AS(eval_H0R(m, {}, {}, 1.0, 0.0, partial), ConfigError);
}

TEST_CASE("major minimizer") {
  const ModelSpec m1 = make_example1();
  const std::vector<double> x{0.0, 0.2, -0.1}, g{1.0, 1.0, 1.0}, a{1.0, 1.0, 1.0};
  const std::vector<double> Pm1(3, -1.0), P0(3, 0.0), Pg(3, 1.0);
  CHECK(minimize_alpha0(m1, 0.5, {x, g, Pm1, Pg}, a) == -1.0);
  CHECK(minimize_alpha0(m1, 0.5, {x, g, P0, Pg}, a) == 0.0);

  const ModelSpec m2 = make_example2();
  const std::vector<double> x2{0.0, 0.0}, g2{1.0, 3.0}, P2{-1.0, -1.0}, Pg2{1.0, 1.0}, a2{0.3, 0.3};
  const JointView v{x2, g2, P2, Pg2};
  const double got = minimize_alpha0(m2, 0.5, v, a2);
  const double grid = grid_argmin([&](double a0) { return mean_H0R(m2, 0.5, v, a2, a0, lam(0, 2)); },
                                  -10.0, 10.0, 1e-4);
  CHECK(got == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(std::fabs(got - grid) <= 2e-4);
}

TEST_CASE("minor minimizer") {
  const ModelSpec m1 = make_example1();
  CHECK(minimize_alpha(m1, {}, {0, 0, -1.0, 0.0}, -1.0, lam(0, 1)) == 1.0);
  CHECK(minimize_alpha(m1, {}, {0, 0, 0.0, 0.0}, -1.0, lam(0, 1)) == 0.0);
  const ModelSpec m2 = make_example2();
  CHECK(minimize_alpha(m2, {1.0, 0, 1}, {0, 0, -1.0, 0.0}, -std::cbrt(3.0), lam(0, 1)) ==
        doctest::Approx(0.48075).epsilon(1e-5));
  CHECK_THROWS_AS(minimize_alpha(m1, {}, {0, 0, -1.0, 0.0}, 0.0, lam(0, 1)), SingularControlError);
  CHECK_THROWS_AS(minimize_alpha(m1, {}, {0, 0, -1.0, 0.0}, 0.0, lam(0, 1), MinimizerMode::numeric),
                  SingularControlError);
}

TEST_CASE("numeric minimizers agree with the closed forms and with grid search") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.3, 2.5), mag(0.5, 2.0);
  const std::vector<ModelSpec> models{make_example1(), make_example2(), make_example3(1.0)};
  for (const auto& m : models) {
    CAPTURE(m.name);
    for (int k = 0; k < 100; ++k) {
      std::vector<double> x(6), g(6), P(6), Pg(6), a(6);
      for (std::size_t i = 0; i < 6; ++i) {
        x[i] = u(rng);
        g[i] = pos(rng);
        P[i] = u(rng);
        Pg[i] = u(rng);
        a[i] = u(rng);
      }
      const JointView v{x, g, P, Pg};
      const double an = minimize_alpha0(m, 0.5, v, a, MinimizerMode::automatic);
      const double nu = minimize_alpha0(m, 0.5, v, a, MinimizerMode::numeric);
      CHECK(std::fabs(an - nu) <= 1e-6);

      const State s{0.5, x[0], g[0]};
      const AdjointState adj{P[0], Pg[0], u(rng), u(rng)};
      const double a0 = (k % 2 ? 1.0 : -1.0) * mag(rng);
      const LambdaSummary l = summarize(x, g);
      const double man = minimize_alpha(m, s, adj, a0, l, MinimizerMode::automatic);
      const double mnu = minimize_alpha(m, s, adj, a0, l, MinimizerMode::numeric);
      CHECK(std::fabs(man - mnu) <= 1e-6);

      if (k < 10) {
        const double ga0 = grid_argmin([&](double b) { return mean_H0R(m, 0.5, v, a, b, l); },
                                       -10.0, 10.0, 1e-4);
        if (std::fabs(an) < 9.9) CHECK(std::fabs(nu - ga0) <= 2e-4);
        const double ga = grid_argmin([&](double b) { return eval_HR(m, s, adj, a0, b, l); },
                                      -10.0, 10.0, 1e-4);
        if (std::fabs(man) < 9.9) CHECK(std::fabs(mnu - ga) <= 2e-4);
      }
    }
  }
}

TEST_CASE("minimizers are stationary") {
  const ModelSpec m = make_example3(1.0);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-2.0, 2.0), mag(0.5, 2.0);
  for (int k = 0; k < 50; ++k) {
    const State s{0.5, u(rng), mag(rng)};
    const AdjointState adj{0, 0, u(rng), u(rng)};
    const double a0 = mag(rng);
    const LambdaSummary l = lam(0.3, 1.2);
    const double a = minimize_alpha(m, s, adj, a0, l, MinimizerMode::numeric);
    CHECK(std::fabs(dHR_dalpha(m, s, adj, a0, a, l)) <= 1e-8);
  }
}

TEST_CASE("projected gradient on a box and its failure mode") {
  const auto f = [](double a) { return (a + 2.0) * (a + 2.0); };
  const auto df = [](double a) { return 2.0 * (a + 2.0); };
  const ScalarMinimum r = projected_gradient(f, df, ActionSet::box(0.0, 1.0));
  CHECK(r.argmin == 0.0);
  CHECK(r.grad_norm <= 1e-8);

  MinimizerOptions tight;
  tight.max_iter = 1;
  const auto g = [](double a) { return std::cosh(a - 3.0) + 0.1 * std::pow(a - 3.0, 4); };
  const auto dg = [](double a) { return std::sinh(a - 3.0) + 0.4 * std::pow(a - 3.0, 3); };
  try {
    projected_gradient(g, dg, ActionSet::whole_line(), tight);
    FAIL("expected OptimizationFailure");
  } catch (const OptimizationFailure& e) {
    CHECK(std::isfinite(e.last_iterate()));
    CHECK(e.grad_norm() > 1e-8);
  }
}

TEST_CASE("strong convexity of the minor Hamiltonian") {
  const ModelSpec m = make_example2();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-3.0, 3.0), mag(0.2, 2.0);
  for (int k = 0; k < 200; ++k) {
    const State s{0.5, u(rng), mag(rng)};
    const AdjointState adj{0, 0, u(rng), u(rng)};
    const double a0 = mag(rng) * (k % 2 ? 1 : -1);
    const double lambda = m.convexity_minor(a0);
    const double a = u(rng), b = u(rng);
    const LambdaSummary l = lam(0.0, 1.0);
    const double gap = eval_HR(m, s, adj, a0, b, l) - eval_HR(m, s, adj, a0, a, l) -
                       dHR_dalpha(m, s, adj, a0, a, l) * (b - a);
    CHECK(gap >= 0.5 * lambda * (b - a) * (b - a) - 1e-12);
  }
  const ModelSpec m1 = make_example1();
  const AdjointState adj{0, 0, -1, 0};
  const double second = eval_HR(m1, {}, adj, 1.0, 1.1, lam(0, 1)) -
                        2.0 * eval_HR(m1, {}, adj, 1.0, 1.0, lam(0, 1)) +
                        eval_HR(m1, {}, adj, 1.0, 0.9, lam(0, 1));
  CHECK(second > 0.0);
}

TEST_CASE("separability probe") {
  const ModelSpec m = make_example1();
  const std::vector<double> x{0.0, 1.0}, g{1.0, 2.0}, P{-1.0, -0.5}, Pg{1.0, 1.0}, a{1.0, 0.5};
  CHECK_NOTHROW(check_major_separability(m, 0.5, {x, g, P, Pg}, a));

  ModelSpec coupled = make_example1();
  coupled.drift = [](const State&, double a0, double al, const LambdaSummary&) { return al * a0; };
  coupled.drift_partials = [](const State&, double a0, double al, const LambdaSummary&) {
    Partials p;
    p.dalpha0 = al;
    p.dalpha = a0;
    return p;
  };
  CHECK_THROWS_AS(check_major_separability(coupled, 0.5, {x, g, P, Pg}, a), PreconditionError);
}

TEST_CASE("necessary conditions on the solved example 1 equilibrium") {
  const MFGSolution sol = solved_example1();
  const ModelSpec m = make_example1();
  VerifyOptions opts;
  opts.tolerance = 1e-8;
  const auto ok = verify_necessary_conditions(m, sol.fbsde, sol.alpha0, sol.fbsde.alpha, opts);
  CHECK(ok.max_violation <= 1e-8);
  CHECK(ok.passed);

  auto shifted = sol.fbsde.alpha;
  for (auto& row : shifted) {
    for (auto& v : row) v += 0.5;
  }
  const auto bad = verify_necessary_conditions(m, sol.fbsde, sol.alpha0, shifted, opts);
  // Strong convexity with lambda = alpha0^2 = 1: at least lambda/2 * 0.5^2.
  CHECK(bad.minor_violation >= 0.125 - 1e-12);
  CHECK_FALSE(bad.passed);

  VerifyOptions empty;
  empty.major_grid.values.clear();
  empty.minor_grid.values.clear();
  const auto none = verify_necessary_conditions(m, sol.fbsde, sol.alpha0, shifted, empty);
  CHECK(none.max_violation == 0.0);

  auto a0_shift = sol.alpha0;
  for (auto& v : a0_shift) v += 0.25;
  const auto major_bad = verify_necessary_conditions(m, sol.fbsde, a0_shift, sol.fbsde.alpha, opts);
  CHECK(major_bad.major_violation >= 0.5 * 0.25 * 0.25 - 1e-12);
}
