#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mmfg/errors.hpp"
#include "mmfg/measure.hpp"

using namespace mmfg;

namespace {

ParticleEnsemble normal_ensemble(std::size_t n, std::uint64_t seed, double shift = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = shift + d(rng);
  return ParticleEnsemble::from_columns({v});
}

// Lifted directional derivative of phi(mu) = mean h(X) along the indicator
// direction H = e_i, scaled by n: [phi(X + eps e_i) - phi(X)] / eps * n,
// Richardson-extrapolated from central differences at eps and eps/2.
double lifted_linear(const std::function<double(double)>& h, std::vector<double> x, std::size_t i) {
  const double n = static_cast<double>(x.size());
  auto phi = [&](double shift) {
    std::vector<double> y = x;
    y[i] += shift;
    double s = 0.0;
    for (double v : y) s += h(v);
    return s / n;
  };
  auto central = [&](double eps) { return (phi(eps) - phi(-eps)) / (2.0 * eps) * n; };
  const double eps = 1e-3;
  return (4.0 * central(eps / 2.0) - central(eps)) / 3.0;
}

}  // namespace

TEST_CASE("mean of two points and of a constant ensemble") {
  const auto e = ParticleEnsemble::from_rows({{1, 3}, {3, 5}});
  const auto m = mean(e);
  CHECK(m[0] == 2.0);
  CHECK(m[1] == 4.0);
  const auto c = ParticleEnsemble::from_rows(std::vector<std::vector<double>>(17, {0.3, 0.3}));
  CHECK(mean(c)[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(mean(c)[1] == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("Monte Carlo mean and second moment of a standard normal sample") {
  const auto e = normal_ensemble(10000, 42);
  CHECK(std::fabs(mean(e)[0]) <= 0.05);
  CHECK(std::fabs(second_moment(e) - 1.0) <= 0.05);
}

TEST_CASE("second moment of simple ensembles") {
  CHECK(second_moment(ParticleEnsemble::from_rows({{0, 0}})) == 0.0);
  CHECK(second_moment(ParticleEnsemble::from_rows({{1, 0}, {0, 1}})) == 1.0);
}

TEST_CASE("mean and second moment are permutation invariant") {
  auto e = normal_ensemble(257, 3);
  std::vector<double> v(e.coord(0).begin(), e.coord(0).end());
  std::vector<double> w = v;
  std::reverse(w.begin(), w.end());
  std::rotate(w.begin(), w.begin() + 31, w.end());
  const auto f = ParticleEnsemble::from_columns({w});
  CHECK(mean(e)[0] == doctest::Approx(mean(f)[0]).epsilon(1e-14));
  CHECK(second_moment(e) == doctest::Approx(second_moment(f)).epsilon(1e-14));
}

TEST_CASE("invalid ensembles are rejected") {
  CHECK_THROWS_AS(ParticleEnsemble::from_rows({}), PreconditionError);
  CHECK_THROWS_AS(ParticleEnsemble::from_rows({{1, 2}, {3}}), PreconditionError);
  CHECK_THROWS_AS(ParticleEnsemble::from_rows({{1, NAN}}), PreconditionError);
  const auto e = ParticleEnsemble::from_rows({{1, 2}});
  CHECK_THROWS_AS(mean(e, std::vector<std::size_t>{}), PreconditionError);
}

TEST_CASE("one-dimensional W2 on small ensembles") {
  const auto a = ParticleEnsemble::from_columns({{0, 0}});
  const auto b = ParticleEnsemble::from_columns({{1, 1}});
  CHECK(wasserstein2_1d(a, a, 0) == 0.0);
  CHECK(wasserstein2_1d(a, b, 0) == 1.0);

  // Exhaustive couplings of two-point uniform measures: identity or swap.
  const std::vector<double> p{0, 2}, q{3, 1};
  const double id = std::sqrt(((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1])) / 2);
  const double sw = std::sqrt(((p[0] - q[1]) * (p[0] - q[1]) + (p[1] - q[0]) * (p[1] - q[0])) / 2);
  CHECK(wasserstein2_1d(ParticleEnsemble::from_columns({p}), ParticleEnsemble::from_columns({q}), 0) ==
        doctest::Approx(std::min(id, sw)).epsilon(1e-15));
  CHECK(std::min(id, sw) == 1.0);

  CHECK_THROWS_AS(wasserstein2_1d(a, ParticleEnsemble::from_columns({{1, 2, 3}}), 0), PreconditionError);
}

TEST_CASE("W2 is a metric on random triples") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = normal_ensemble(64, 3 * s, 0.0);
    const auto b = normal_ensemble(64, 3 * s + 1, 0.5);
    const auto c = normal_ensemble(64, 3 * s + 2, -0.7);
    const double ab = wasserstein2_1d(a, b, 0), ba = wasserstein2_1d(b, a, 0);
    const double bc = wasserstein2_1d(b, c, 0), ac = wasserstein2_1d(a, c, 0);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-15));
    CHECK(ac <= ab + bc + 1e-12);
    CHECK(ab > 0.0);
  }
  // Zero exactly when the sorted samples coincide.
  const auto a = ParticleEnsemble::from_columns({{3, 1, 2}});
  const auto b = ParticleEnsemble::from_columns({{2, 3, 1}});
  CHECK(wasserstein2_1d(a, b, 0) == 0.0);
}

TEST_CASE("flow distance") {
  std::vector<double> grid{0.0, 0.5, 1.0};
  std::vector<ParticleEnsemble> fe, ge;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    auto e = normal_ensemble(100, n);
    fe.push_back(e);
    std::vector<double> shifted(e.coord(0).begin(), e.coord(0).end());
    for (auto& v : shifted) v += 1.0;
    ge.push_back(ParticleEnsemble::from_columns({shifted}));
  }
  const MeasureFlow f(grid, fe), g(grid, ge);
  CHECK(flow_distance(f, f) == 0.0);
  CHECK(flow_distance(f, g) == doctest::Approx(1.0).epsilon(1e-13));
  const MeasureFlow h({0.0, 0.4, 1.0}, fe);
  CHECK_THROWS_AS(flow_distance(f, h), PreconditionError);
}

TEST_CASE("flows of the same SDE from two seeds stay close") {
  // dX = 0.3 dt + 0.2 dB on [0, 1], 10 steps, 10^4 particles.
  auto flow = [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> x(10000, 0.0), grid;
    std::vector<ParticleEnsemble> es;
    const double dt = 0.1;
    for (int n = 0; n <= 10; ++n) {
      grid.push_back(n * dt);
      es.push_back(ParticleEnsemble::from_columns({x}));
      for (auto& v : x) v += 0.3 * dt + 0.2 * std::sqrt(dt) * d(rng);
    }
    return MeasureFlow(grid, es);
  };
  CHECK(flow_distance(flow(1), flow(2)) <= 0.1);
}

TEST_CASE("L-derivative of linear functionals") {
  const auto e = ParticleEnsemble::from_rows({{1.0, -2.0}, {0.5, 4.0}, {3.0, 0.0}});
  const auto id = l_derivative_linear([](std::span<const double> v) {
    return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
  }, e);
  for (const auto& m : id) CHECK(m == Eigen::MatrixXd::Identity(2, 2));

  const auto zero = l_derivative_linear([](std::span<const double>) {
    return Eigen::MatrixXd::Zero(1, 2);
  }, e);
  for (const auto& m : zero) CHECK(m.isZero(0.0));

  const auto sq = ParticleEnsemble::from_columns({{1.0, 2.0, 3.0}});
  const auto d = l_derivative_linear([](std::span<const double> v) {
    Eigen::MatrixXd j(1, 1);
    j(0, 0) = 2.0 * v[0];
    return j;
  }, sq);
  CHECK(d[0](0, 0) == 2.0);
  CHECK(d[1](0, 0) == 4.0);
  CHECK(d[2](0, 0) == 6.0);
}

TEST_CASE("L-derivatives match lifted finite differences") {
  const std::vector<double> x{-1.3, 0.2, 0.9, 2.4, 1.1};
  const auto e = ParticleEnsemble::from_columns({x});
  struct Case {
    std::function<double(double)> h;
    std::function<double(double)> dh;
  };
  const std::vector<Case> cases{
      {[](double v) { return v; }, [](double) { return 1.0; }},
      {[](double v) { return v * v; }, [](double v) { return 2.0 * v; }},
      {[](double v) { return v * v * v; }, [](double v) { return 3.0 * v * v; }},
  };
  for (const auto& c : cases) {
    const auto d = l_derivative_linear([&](std::span<const double> v) {
      Eigen::MatrixXd j(1, 1);
      j(0, 0) = c.dh(v[0]);
      return j;
    }, e);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double fd = lifted_linear(c.h, x, i);
      CHECK(std::fabs(d[i](0, 0) - fd) <= 1e-5 * std::max(1.0, std::fabs(fd)));
    }
  }
}

TEST_CASE("L-derivative of the reciprocal mean") {
  CHECK(reciprocal_mean_derivative(1.0) == -1.0);
  CHECK(reciprocal_mean_derivative(2.0) == -0.25);
  const auto e = ParticleEnsemble::from_columns({{1.0, 3.0}});
  const auto d = l_derivative_reciprocal_mean(e, 0);
  CHECK(d[0] == -0.25);
  CHECK(d[1] == -0.25);

  // Lifted difference with H = 1: phi(X + eps) = 1 / (mean + eps).
  auto phi = [](double eps) { return 1.0 / (2.0 + eps); };
  auto central = [&](double h) { return (phi(h) - phi(-h)) / (2.0 * h); };
  const double fd = (4.0 * central(5e-4) - central(1e-3)) / 3.0;
  CHECK(std::fabs(fd - d[0]) <= 1e-5 * 0.25);

  // Its expectation is -1/mean^2 exactly: the derivative is constant.
  double s = 0.0;
  for (double v : d) s += v;
  CHECK(s / 2.0 == -0.25);

  CHECK_THROWS_AS(reciprocal_mean_derivative(1e-9), SingularMeanError);
  CHECK_THROWS_AS(l_derivative_reciprocal_mean(ParticleEnsemble::from_columns({{-1.0, 1.0}}), 0),
                  SingularMeanError);
}

TEST_CASE("marginal embedding pads the other marginal with zeros") {
  Eigen::MatrixXd five(1, 1);
  five(0, 0) = 5.0;
  const auto j = marginal_embed({five}, Marginal::first, 1, 1);
  REQUIRE(j[0].rows() == 1);
  REQUIRE(j[0].cols() == 2);
  CHECK(j[0](0, 0) == 5.0);
  CHECK(j[0](0, 1) == 0.0);

  const auto z = marginal_embed({Eigen::MatrixXd::Zero(1, 1)}, Marginal::second, 1, 1);
  CHECK(z[0].isZero(0.0));

  CHECK_THROWS_AS(marginal_embed({Eigen::MatrixXd::Zero(1, 2)}, Marginal::first, 1, 1),
                  PreconditionError);

  // h(x, gamma) = x on the joint: lifted finite differences in the x and
  // gamma directions give (1, 0).
  const std::vector<double> xs{0.4, -1.0, 2.0}, gs{1.0, 0.5, 0.0};
  Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  const auto lifted = marginal_embed({one, one, one}, Marginal::first, 1, 1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = lifted_linear([](double v) { return v; }, xs, i);
    // Perturbing gamma_i leaves phi = mean of x unchanged.
    auto phi = [&](double eps) {
      std::vector<double> g = gs;
      g[i] += eps;
      double s = 0.0;
      for (std::size_t k = 0; k < xs.size(); ++k) s += xs[k] + 0.0 * g[k];
      return s / 3.0;
    };
    const double dg = (phi(1e-3) - phi(-1e-3)) / 2e-3 * 3.0;
    CHECK(lifted[i](0, 0) == doctest::Approx(dx).epsilon(1e-10));
    CHECK(lifted[i](0, 1) == dg);
  }
}
