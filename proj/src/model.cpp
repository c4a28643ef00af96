#include "mmfg/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mmfg/errors.hpp"
#include "mmfg/simd.hpp"

namespace mmfg {

LambdaSummary summarize(std::span<const double> x, std::span<const double> gamma) {
  if (x.empty() || x.size() != gamma.size()) {
    throw PreconditionError("summarize: empty or mismatched coordinate arrays");
  }
  const double n = static_cast<double>(x.size());
  const double m2 = (simd::sum_squares(x) + simd::sum_squares(gamma)) / n;
  return LambdaSummary::of(simd::sum(x) / n, simd::sum(gamma) / n, m2);
}

LambdaSummary summarize(const ParticleEnsemble& joint) {
  if (joint.dim() != 2) throw PreconditionError("summarize: expected a joint (x, gamma) ensemble");
  return summarize(joint.coord(0), joint.coord(1));
}

void require_statistics(const LambdaSummary& summary, unsigned needed, const char* who) {
  const unsigned missing = needed & ~summary.available;
  if (missing == 0) return;
  std::vector<std::string> keys;
  if (missing & kMeanX) keys.emplace_back("mean_x");
  if (missing & kMeanGamma) keys.emplace_back("mean_gamma");
  if (missing & kSecondMoment) keys.emplace_back("second_moment");
  std::string list;
  for (const auto& k : keys) list += (list.empty() ? "" : ", ") + k;
  throw ConfigError(std::string(who) + ": lambda summary lacks " + list, keys);
}

ActionSet::ActionSet()
    : lower_(-std::numeric_limits<double>::infinity()),
      upper_(std::numeric_limits<double>::infinity()) {}

ActionSet ActionSet::box(double lower, double upper) {
  if (!(lower <= upper)) throw PreconditionError("ActionSet: lower bound exceeds upper bound");
  ActionSet s;
  s.lower_ = lower;
  s.upper_ = upper;
  return s;
}

double ActionSet::project(double a) const { return std::min(std::max(a, lower_), upper_); }

bool ActionSet::bounded() const noexcept { return std::isfinite(lower_) || std::isfinite(upper_); }

SigmaSchedule SigmaSchedule::constant(double value) { return piecewise({0.0}, {value}); }

SigmaSchedule SigmaSchedule::piecewise(std::vector<double> starts, std::vector<double> values) {
  if (starts.empty() || starts.size() != values.size()) {
    throw PreconditionError("SigmaSchedule: starts and values must be nonempty and equal length");
  }
  if (starts.front() != 0.0) throw PreconditionError("SigmaSchedule: first segment must start at 0");
  for (std::size_t i = 1; i < starts.size(); ++i) {
    if (!(starts[i] > starts[i - 1])) throw PreconditionError("SigmaSchedule: starts not increasing");
  }
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw PreconditionError("SigmaSchedule: sigma must be >= 0");
  }
  SigmaSchedule s;
  s.starts_ = std::move(starts);
  s.values_ = std::move(values);
  return s;
}

double SigmaSchedule::at(double t) const {
  std::size_t i = 0;
  while (i + 1 < starts_.size() && starts_[i + 1] <= t) ++i;
  return values_[i];
}

double SigmaSchedule::integrated_variance(double a, double b) const {
  if (b <= a) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < starts_.size(); ++i) {
    const double lo = std::max(a, starts_[i]);
    const double hi = std::min(b, i + 1 < starts_.size() ? starts_[i + 1] : b);
    if (hi > lo) total += values_[i] * values_[i] * (hi - lo);
  }
  return total;
}

void ModelSpec::validate() const {
  std::vector<std::string> missing;
  if (!drift) missing.emplace_back("drift");
  if (!drift_partials) missing.emplace_back("drift_partials");
  if (!vol) missing.emplace_back("vol");
  if (!run_cost_major) missing.emplace_back("run_cost_major");
  if (!run_cost_major_partials) missing.emplace_back("run_cost_major_partials");
  if (!term_cost_major) missing.emplace_back("term_cost_major");
  if (!term_cost_major_partials) missing.emplace_back("term_cost_major_partials");
  if (!run_cost_minor) missing.emplace_back("run_cost_minor");
  if (!run_cost_minor_partials) missing.emplace_back("run_cost_minor_partials");
  if (!term_cost_minor) missing.emplace_back("term_cost_minor");
  if (!term_cost_minor_partials) missing.emplace_back("term_cost_minor_partials");
  if (!convexity_major) missing.emplace_back("convexity_major");
  if (!convexity_minor) missing.emplace_back("convexity_minor");
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw PreconditionError("model '" + name + "' is missing coefficients: " + list);
  }
  if (!(horizon > 0.0)) throw PreconditionError("model '" + name + "': horizon must be positive");
}

double ModelSpec::param(const std::string& key, double fallback) const {
  for (const auto& [k, v] : params) {
    if (k == key) return v;
  }
  return fallback;
}

namespace {

double checked_reciprocal(double m) {
  // Same guard as the reciprocal-mean L-derivative.
  (void)reciprocal_mean_derivative(m);
  return 1.0 / m;
}

// Shared structure of the three green-finance examples; they differ only in
// the regulator's running cost f0.
ModelSpec green_finance_base(const ExampleOptions& opts) {
  ModelSpec m;
  m.horizon = opts.horizon;
  m.sigma = opts.sigma;
  m.initial = opts.initial;
  m.major_reads = kMeanX | kMeanGamma;
  m.minor_reads = 0;

  const SigmaSchedule sigma = opts.sigma;
  m.drift = [sigma](const State& s, double a0, double a, const LambdaSummary&) {
    const double sig = sigma.at(s.t);
    return a - a0 - 0.5 * sig * sig;
  };
  m.drift_partials = [](const State&, double, double, const LambdaSummary&) {
    Partials p;
    p.dalpha0 = -1.0;
    p.dalpha = 1.0;
    return p;
  };
  m.vol = [sigma](const State& s) { return sigma.at(s.t); };

  m.term_cost_major = [](const LambdaSummary& l) {
    require_statistics(l, kMeanX | kMeanGamma, "g0");
    return -l.mean_x + l.mean_gamma;
  };
  m.term_cost_major_partials = [](const LambdaSummary&) {
    SummaryGradient g;
    g.mean_x = -1.0;
    g.mean_gamma = 1.0;
    return g;
  };

  m.run_cost_minor = [](const State&, double a0, double a, const LambdaSummary&) {
    return 0.5 * a * a * a0 * a0;
  };
  m.run_cost_minor_partials = [](const State&, double a0, double a, const LambdaSummary&) {
    Partials p;
    p.dalpha = a * a0 * a0;
    p.dalpha0 = a * a * a0;
    return p;
  };
  m.term_cost_minor = [](double x, double, const LambdaSummary&) { return -x; };
  m.term_cost_minor_partials = [](double, double, const LambdaSummary&) {
    Partials p;
    p.dx = -1.0;
    return p;
  };

  m.convexity_minor = [](double a0) { return a0 * a0; };

  // argmin_a (a - a0) y + a ygrave + a^2 a0^2 / 2
  m.analytic_alpha = [actions = m.minor_actions](const State&, const AdjointState& adj, double a0,
                                                 const LambdaSummary&) {
    if (!(a0 * a0 > kMeanFloor * kMeanFloor)) {
      throw SingularControlError("minor minimizer: alpha0 = " + std::to_string(a0) +
                                 " makes the minor Hamiltonian degenerate");
    }
    return actions.project(-(adj.Y + adj.Ygrave) / (a0 * a0));
  };
  return m;
}

void push_common_params(ModelSpec& m, const ExampleOptions& opts) {
  m.params = {{"horizon", opts.horizon},
              {"x0", opts.initial.x_mean},
              {"x0_std", opts.initial.x_std},
              {"gamma0", opts.initial.gamma}};
}

}  // namespace

ModelSpec make_example1(const ExampleOptions& opts) {
  ModelSpec m = green_finance_base(opts);
  m.name = "example1";
  push_common_params(m, opts);

  m.run_cost_major = [](double, double a0, const LambdaSummary&) { return 0.5 * a0 * a0; };
  m.run_cost_major_partials = [](double, double a0, const LambdaSummary&) {
    Partials p;
    p.dalpha0 = a0;
    return p;
  };
  m.convexity_major = [](const LambdaSummary&) { return 1.0; };
  m.analytic_alpha0 = [actions = m.major_actions](double, const JointView& v, const LambdaSummary&) {
    return actions.project(simd::mean(v.P));
  };

  const double g0 = opts.initial.gamma;
  m.oracle = AnalyticOracle{
      [](double) { return -1.0; },
      [](double) { return 1.0; },
      [g0](double t) { return g0 + t; },
  };
  m.reduction = MeanFieldReduction{false, 0.0};
  return m;
}

ModelSpec make_example3(double kappa, const ExampleOptions& opts) {
  ModelSpec m = green_finance_base(opts);
  m.name = "example3";
  push_common_params(m, opts);
  m.params.emplace_back("kappa", kappa);

  m.run_cost_major = [kappa](double, double a0, const LambdaSummary& l) {
    require_statistics(l, kMeanX | kMeanGamma, "f0");
    return 0.5 * a0 * a0 * checked_reciprocal(l.mean_gamma) + kappa * a0 * l.mean_x;
  };
  m.run_cost_major_partials = [kappa](double, double a0, const LambdaSummary& l) {
    Partials p;
    p.dalpha0 = a0 * checked_reciprocal(l.mean_gamma) + kappa * l.mean_x;
    p.dlambda.mean_gamma = 0.5 * a0 * a0 * reciprocal_mean_derivative(l.mean_gamma);
    p.dlambda.mean_x = kappa * a0;
    return p;
  };
  m.convexity_major = [](const LambdaSummary& l) { return checked_reciprocal(l.mean_gamma); };
  m.analytic_alpha0 = [kappa, actions = m.major_actions](double, const JointView& v,
                                                         const LambdaSummary&) {
    const double mean_gamma = simd::mean(v.gamma);
    if (!(mean_gamma > kMeanFloor)) {
      throw SingularMeanError("major minimizer: E[gamma] = " + std::to_string(mean_gamma) +
                              " must be above the mean floor");
    }
    return actions.project((simd::mean(v.P) - kappa * simd::mean(v.x)) * mean_gamma);
  };
  m.reduction = MeanFieldReduction{true, kappa};
  return m;
}

ModelSpec make_example2(const ExampleOptions& opts) {
  ModelSpec m = make_example3(0.0, opts);
  m.name = "example2";
  m.params.pop_back();
  const double g0 = opts.initial.gamma;
  // Solution of d m = dt / m^2 with m(0) = gamma0.
  auto mean_gamma = [g0](double t) { return std::cbrt(g0 * g0 * g0 + 3.0 * t); };
  m.oracle = AnalyticOracle{
      [mean_gamma](double t) { return -mean_gamma(t); },
      [mean_gamma](double t) {
        const double mg = mean_gamma(t);
        return 1.0 / (mg * mg);
      },
      mean_gamma,
  };
  return m;
}

ModelSpec make_model(const std::string& name, double kappa, const ExampleOptions& opts) {
  if (name == "example1") return make_example1(opts);
  if (name == "example2") return make_example2(opts);
  if (name == "example3") return make_example3(kappa, opts);
  throw ConfigError("unknown model '" + name + "'", {"model.name"});
}

}  // namespace mmfg
