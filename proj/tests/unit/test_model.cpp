#include <cmath>
#include <random>

#include "doctest.h"
#include "mmfg/errors.hpp"
#include "mmfg/model.hpp"

using namespace mmfg;

namespace {

ExampleOptions quiet() {
  ExampleOptions o;
  o.sigma = SigmaSchedule::constant(0.0);
  return o;
}

LambdaSummary lam(double mx, double mg, double m2 = 0.0) { return LambdaSummary::of(mx, mg, m2); }

}  // namespace

TEST_CASE("example 1 coefficients") {
  const ModelSpec m = make_example1(quiet());
  CHECK(m.run_cost_major(0.3, 2.0, lam(0.4, 1.0)) == 2.0);
  CHECK(m.term_cost_minor(3.0, 0.7, lam(0, 1)) == -3.0);
  CHECK(m.drift({0.2, 1.0, 1.0}, 0.0, 0.0, lam(0, 1)) == 0.0);
  CHECK(m.term_cost_major(lam(2.0, 0.5)) == -1.5);
  CHECK(m.oracle->alpha0(0.7) == -1.0);
  CHECK(m.oracle->alpha(0.7) == 1.0);
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("example 1 drift keeps the volatility correction") {
  const ModelSpec m = make_example1();
  CHECK(m.drift({0.0, 0.0, 0.0}, -1.0, 1.0, lam(0, 1)) == doctest::Approx(2.0 - 0.02));
}

TEST_CASE("example 2 oracle") {
  const ModelSpec m = make_example2();
  CHECK(m.oracle->mean_gamma(1.0) == doctest::Approx(1.44225).epsilon(1e-5));
  CHECK(m.oracle->mean_gamma(1.0) == doctest::Approx(std::cbrt(3.0)).epsilon(1e-15));
  CHECK(m.oracle->alpha0(1.0) == doctest::Approx(-std::cbrt(3.0)).epsilon(1e-15));
  CHECK(m.oracle->mean_gamma(0.0) == 0.0);
  CHECK(m.oracle->alpha(1.0) == doctest::Approx(1.0 / std::cbrt(9.0)).epsilon(1e-15));
}

TEST_CASE("example 2 oracle mean solves its ODE") {
  const ModelSpec m = make_example2();
  for (double t : {0.01, 0.05, 0.2, 0.5, 0.9, 1.0}) {
    const double mg = m.oracle->mean_gamma(t);
    // d/dt (3t)^(1/3) in closed form.
    const double slope = std::pow(3.0, 1.0 / 3.0) / 3.0 * std::pow(t, -2.0 / 3.0);
    CHECK(std::fabs(slope - 1.0 / (mg * mg)) <= 1e-10 * std::max(1.0, slope));
  }
}

TEST_CASE("example 3 running cost and minimizer") {
  const ModelSpec m = make_example3(1.0);
  CHECK(m.run_cost_major(0.0, 1.0, lam(2.0, 1.0)) == 2.5);

  // E[P] = -1, E[X] = 0, E[gamma] = 1: grid search of the averaged
  // Hamiltonian a0 -> -a0 E[P] + a0^2 / (2 E[gamma]) + a0 E[X] over [-5, 5].
  const std::vector<double> x{-0.5, 0.5}, g{0.5, 1.5}, P{-1.0, -1.0}, Pg{1.0, 1.0};
  const JointView v{x, g, P, Pg};
  double best = 0.0, best_val = INFINITY;
  for (int k = -50000; k <= 50000; ++k) {
    const double a0 = k * 1e-4;
    const double h = -a0 * -1.0 + 0.5 * a0 * a0 / 1.0 + a0 * 0.0;
    if (h < best_val) {
      best_val = h;
      best = a0;
    }
  }
  CHECK(m.analytic_alpha0(0.5, v, lam(0.0, 1.0)) == doctest::Approx(best).epsilon(1e-12));
  CHECK(best == doctest::Approx(-1.0));
}

TEST_CASE("example 3 at zero coupling reproduces example 2") {
  const ModelSpec a = make_example2();
  const ModelSpec b = make_example3(0.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.1, 3.0);
  for (int k = 0; k < 200; ++k) {
    const double t = pos(rng) / 3.0, x = u(rng), gam = pos(rng), a0 = u(rng), al = u(rng);
    const LambdaSummary l = lam(u(rng), pos(rng), pos(rng));
    const State s{t, x, gam};
    CHECK(a.drift(s, a0, al, l) == b.drift(s, a0, al, l));
    CHECK(a.run_cost_major(t, a0, l) == b.run_cost_major(t, a0, l));
    CHECK(a.run_cost_minor(s, a0, al, l) == b.run_cost_minor(s, a0, al, l));
    CHECK(a.term_cost_major(l) == b.term_cost_major(l));
    CHECK(a.term_cost_minor(x, gam, l) == b.term_cost_minor(x, gam, l));
    const Partials pa = a.run_cost_major_partials(t, a0, l), pb = b.run_cost_major_partials(t, a0, l);
    CHECK(pa.dalpha0 == pb.dalpha0);
    CHECK(pa.dlambda.mean_gamma == pb.dlambda.mean_gamma);
    CHECK(pa.dlambda.mean_x == pb.dlambda.mean_x);
  }
}

TEST_CASE("analytic minimizers satisfy the first-order conditions") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.2, 3.0);
  for (double kappa : {0.0, 1.0, -0.7}) {
    const ModelSpec m = make_example3(kappa);
    for (int k = 0; k < 100; ++k) {
      std::vector<double> x(8), g(8), P(8), Pg(8);
      for (std::size_t i = 0; i < 8; ++i) {
        x[i] = u(rng);
        g[i] = pos(rng);
        P[i] = u(rng);
        Pg[i] = u(rng);
      }
      double mx = 0, mg = 0, mp = 0;
      for (std::size_t i = 0; i < 8; ++i) {
        mx += x[i] / 8;
        mg += g[i] / 8;
        mp += P[i] / 8;
      }
      const double a0 = m.analytic_alpha0(0.5, {x, g, P, Pg}, lam(mx, mg));
      // d/da0 of E[b P + alpha Pgrave + f0] = -E[P] + a0 / E[gamma] + kappa E[x]
      CHECK(std::fabs(-mp + a0 / mg + kappa * mx) <= 1e-10);

      const AdjointState adj{0.0, 0.0, u(rng), u(rng)};
      double a0m = u(rng);
      if (std::fabs(a0m) < 0.1) a0m = 0.5;
      const double a = m.analytic_alpha({0.5, 0.0, 1.0}, adj, a0m, lam(mx, mg));
      // d/da of (a - a0) Y + a Ygrave + a^2 a0^2 / 2
      CHECK(std::fabs(adj.Y + adj.Ygrave + a * a0m * a0m) <= 1e-10);
    }
  }
}

TEST_CASE("minor minimizer refuses a vanishing major action") {
  const ModelSpec m = make_example1();
  CHECK_THROWS_AS(m.analytic_alpha({0, 0, 0}, {0, 0, -1, 0}, 0.0, lam(0, 1)), SingularControlError);
}

TEST_CASE("example 2 major minimizer refuses a vanishing mean gamma") {
  const ModelSpec m = make_example2();
  const std::vector<double> z{0.0, 0.0}, P{-1.0, -1.0};
  CHECK_THROWS_AS(m.analytic_alpha0(0.0, {z, z, P, P}, lam(0, 0)), SingularMeanError);
  CHECK_THROWS_AS(m.run_cost_major(0.0, 1.0, lam(0, 0)), SingularMeanError);
}

TEST_CASE("summaries and statistic requirements") {
  const std::vector<double> x{1.0, 3.0}, g{0.0, 2.0};
  const LambdaSummary s = summarize(x, g);
  CHECK(s.mean_x == 2.0);
  CHECK(s.mean_gamma == 1.0);
  CHECK(s.second_moment == (1.0 + 9.0 + 0.0 + 4.0) / 2.0);

  LambdaSummary partial;
  partial.mean_x = 1.0;
  partial.available = kMeanX;
  const ModelSpec m = make_example1();
  try {
    m.term_cost_major(partial);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.keys().size() == 1);
    CHECK(e.keys()[0] == "mean_gamma");
  }
}

TEST_CASE("action sets and sigma schedules") {
  const ActionSet box = ActionSet::box(-1.0, 2.0);
  CHECK(box.project(5.0) == 2.0);
  CHECK(box.project(-5.0) == -1.0);
  CHECK(box.project(0.5) == 0.5);
  CHECK(box.bounded());
  CHECK_FALSE(ActionSet::whole_line().bounded());
  CHECK_THROWS_AS(ActionSet::box(1.0, 0.0), PreconditionError);

  const SigmaSchedule s = SigmaSchedule::piecewise({0.0, 0.5}, {0.2, 0.4});
  CHECK(s.at(0.25) == 0.2);
  CHECK(s.at(0.5) == 0.4);
  CHECK(s.integrated_variance(0.0, 1.0) == doctest::Approx(0.04 * 0.5 + 0.16 * 0.5));
  CHECK_THROWS_AS(SigmaSchedule::piecewise({0.1}, {0.2}), PreconditionError);
  CHECK_THROWS_AS(SigmaSchedule::piecewise({0.0}, {-0.2}), PreconditionError);
}

TEST_CASE("models by name") {
  CHECK(make_model("example1", 1.0, {}).name == "example1");
  CHECK(make_model("example2", 1.0, {}).name == "example2");
  CHECK(make_model("example3", 0.5, {}).param("kappa", 0.0) == 0.5);
  CHECK_THROWS_AS(make_model("example9", 1.0, {}), ConfigError);
  ModelSpec broken = make_example1();
  broken.drift = nullptr;
  CHECK_THROWS_AS(broken.validate(), PreconditionError);
}
