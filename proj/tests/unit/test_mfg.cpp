#include <cmath>

#include "doctest.h"
#include "mmfg/errors.hpp"
#include "mmfg/mfg.hpp"

using namespace mmfg;

namespace {

MFGConfig config(std::size_t particles, std::size_t steps, double t_min) {
  MFGConfig c;
  c.solver.particles = particles;
  c.solver.steps = steps;
  c.solver.t_min = t_min;
  return c;
}

double interpolate(const TimeGrid& g, const std::vector<double>& v, double t) {
  const double u = (t - g.t_min) / g.dt();
  const auto n = static_cast<std::size_t>(std::floor(u));
  const double w = u - static_cast<double>(n);
  return (1.0 - w) * v[n] + w * v[n + 1];
}

}  // namespace

TEST_CASE("example 1 equilibrium for several ensemble sizes") {
  for (std::size_t N : {50u, 500u}) {
    const MFGConfig c = config(N, 40, 0.0);
    const MFGSolution s = solve_mmmfg(make_example1(), c);
    for (double a0 : s.alpha0) CHECK(a0 == -1.0);
    for (const auto& row : s.fbsde.alpha) {
      for (double a : row) CHECK(a == 1.0);
    }
    CHECK(s.fixed_point_residuals.size() <= 3);
    CHECK(s.fixed_point_residuals.back() <= c.fp_tol);
  }
}

TEST_CASE("a game without measure coupling needs one flow update") {
  // f0 = a0^2/2 + a0 and g0 = 0: nothing reads the flow, and alpha0 = -1.
  ModelSpec m = make_example1();
  m.term_cost_major = [](const LambdaSummary&) { return 0.0; };
  m.term_cost_major_partials = [](const LambdaSummary&) { return SummaryGradient{}; };
  m.run_cost_major = [](double, double a0, const LambdaSummary&) { return 0.5 * a0 * a0 + a0; };
  m.run_cost_major_partials = [](double, double a0, const LambdaSummary&) {
    Partials p;
    p.dalpha0 = a0 + 1.0;
    return p;
  };
  m.analytic_alpha0 = nullptr;
  m.oracle.reset();
  const MFGSolution s = solve_mmmfg(m, config(200, 20, 0.0));
  CHECK(s.flow_updates == 1);
  for (double a0 : s.alpha0) CHECK(a0 == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("example 2 Monte Carlo equilibrium") {
  const ModelSpec m = make_example2();
  const MFGConfig c = config(10000, 200, 0.01);
  // Subcases re-enter the test case; solve once.
  static const MFGSolution s = solve_mmmfg(m, c);
  double worst = 0.0;
  for (std::size_t n = 0; n < s.fbsde.grid.size(); ++n) {
    const double t = s.fbsde.grid.time(n);
    if (t < 0.05) continue;
    const double ref = -std::cbrt(3.0 * t);
    worst = std::max(worst, std::fabs(s.alpha0[n] - ref) / std::fabs(ref));
  }
  CHECK(worst <= 2e-2);
  CHECK(s.fixed_point_residuals.back() <= c.fp_tol);

  SUBCASE("necessary conditions") {
    VerifyOptions o;
    o.tolerance = 1e-4;
    o.particle_stride = 7;
    const auto r = verify_necessary_conditions(m, s.fbsde, s.alpha0, s.fbsde.alpha, o);
    CHECK(r.max_violation <= 1e-4);
  }
  SUBCASE("fixed-point certificate") {
    const FixedPointCertificate cert = certify_fixed_point(m, c, s);
    CHECK(cert.strategy_change <= 2.0 * c.solver.picard.tol);
    CHECK(cert.flow_change <= 2.0 * c.fp_tol);
    CHECK(cert.passed);
  }
  SUBCASE("decoupling fields and export") {
    const DecouplingFields f = fit_decoupling_fields(s, c.solver.degree);
    for (std::size_t n = 0; n < f.grid.size(); ++n) {
      CHECK(std::fabs(f.P[n](0.1, 0.5) + 1.0) <= 1e-6);
      CHECK(f.P[n].rms_residual <= 1e-6);
    }
    const EquilibriumBundle b = export_equilibrium(m, s, f);
    CHECK(interpolate(b.grid, b.alpha0, 0.125) == doctest::Approx(-0.721125).epsilon(2e-2));

    // Exported feedback at training points. Against the minimizer implied by
    // the stored adjoints the gap is the fit error alone; the stored actions
    // are the last Picard iterate and may differ by its residual as well.
    double worst_fit = 0.0, worst_stored = 0.0, bound = 0.0;
    for (std::size_t n = 0; n < b.grid.size(); n += 10) {
      const double a0 = b.alpha0[n];
      bound = std::max(bound, 2.0 * f.residual[n] / (a0 * a0));
      for (std::size_t i = 0; i < s.fbsde.particles; i += 50) {
        const double x = s.fbsde.X[n][i], g = s.fbsde.gamma[n][i];
        const double a = b.minor_action(m, n, x, g, a0);
        const AdjointState adj{0.0, 0.0, s.fbsde.Y[n][i], s.fbsde.Ygrave[n][i]};
        const double implied = minimize_alpha(m, {s.fbsde.grid.time(n), x, g}, adj, a0,
                                              s.fbsde.minor_lambda[n]);
        worst_fit = std::max(worst_fit, std::fabs(a - implied));
        worst_stored = std::max(worst_stored, std::fabs(a - s.fbsde.alpha[n][i]));
      }
    }
    CHECK(worst_fit <= bound + 1e-12);
    CHECK(worst_stored <= bound + s.fbsde.picard_residuals.back() + 1e-12);
  }
}

TEST_CASE("decoupling fields and bundle for example 1") {
  const ModelSpec m = make_example1();
  const MFGSolution s = solve_mmmfg(m, config(300, 25, 0.0));
  const DecouplingFields f = fit_decoupling_fields(s, 2);
  for (std::size_t n = 0; n < f.grid.size(); ++n) {
    CHECK(f.theta_Y(n, 0.7, 0.2) == -1.0);
    CHECK(f.theta_Ygrave(n, -0.3, 1.2) == 0.0);
    CHECK(f.residual[n] == 0.0);
  }
  const EquilibriumBundle b = export_equilibrium(m, s, f, "{\"seed\":1}");
  for (double a0 : b.alpha0) CHECK(a0 == -1.0);

  const std::string text = bundle_to_json(b);
  const EquilibriumBundle back = bundle_from_json(text);
  CHECK(bundle_to_json(back) == text);
  CHECK(back.grid == b.grid);
  for (std::size_t n = 0; n < b.grid.size(); ++n) {
    CHECK(back.minor_action(m, n, 0.4, 0.3, back.alpha0[n]) == b.minor_action(m, n, 0.4, 0.3, b.alpha0[n]));
    CHECK(back.flow_summaries[n].mean_gamma == b.flow_summaries[n].mean_gamma);
  }
  CHECK(text.find("\"spec_version\"") != std::string::npos);
}

TEST_CASE("example 3 round trip keeps every evaluation") {
  const ModelSpec m = make_example3(1.0);
  const MFGSolution s = solve_mmmfg(m, config(1000, 30, 0.01));
  const DecouplingFields f = fit_decoupling_fields(s, 2);
  const EquilibriumBundle b = export_equilibrium(m, s, f);
  const EquilibriumBundle back = bundle_from_json(bundle_to_json(b));
  for (std::size_t n = 0; n < b.grid.size(); ++n) {
    for (double x : {-0.5, 0.0, 1.3}) {
      CHECK(back.fields.theta_Y(n, x, 0.4) == b.fields.theta_Y(n, x, 0.4));
      CHECK(back.fields.theta_Ygrave(n, x, 0.4) == b.fields.theta_Ygrave(n, x, 0.4));
      CHECK(back.fields.P[n](x, 0.4) == b.fields.P[n](x, 0.4));
    }
  }
}

TEST_CASE("malformed bundles are I/O errors") {
  CHECK_THROWS_AS(bundle_from_json("{not json"), IoError);
  CHECK_THROWS_AS(bundle_from_json("{\"spec_version\":\"1.0.0\"}"), IoError);
}

TEST_CASE("outer loop reports non-convergence") {
  MFGConfig c = config(500, 20, 0.01);
  c.max_iter = 1;
  c.fp_tol = 1e-12;
  try {
    solve_mmmfg(make_example2(), c);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.residuals().size() == 1);
  }
}

TEST_CASE("mfg config validation") {
  MFGConfig c;
  c.damping = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.damping = 0.5;
  c.fp_tol = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
