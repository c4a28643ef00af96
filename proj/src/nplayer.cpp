#include "mmfg/nplayer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "json.hpp"
#include "mmfg/errors.hpp"
#include "mmfg/parallel.hpp"
#include "mmfg/simd.hpp"

namespace mmfg {

void FiniteGameConfig::validate() const {
  if (players < 2) {
    throw PreconditionError("finite game: the leave-one-out measure needs at least 2 minor players");
  }
  std::vector<std::string> bad;
  if (mc_runs < 1) bad.emplace_back("finite_game.mc_runs");
  if (threads < 1) bad.emplace_back("finite_game.threads");
  if (deviations.sampled_players < 1) bad.emplace_back("finite_game.sampled_players");
  if (!player_streams.empty()) {
    std::vector<std::uint64_t> sorted = player_streams;
    std::sort(sorted.begin(), sorted.end());
    bool perm = sorted.size() == players;
    for (std::size_t i = 0; perm && i < sorted.size(); ++i) perm = sorted[i] == i;
    if (!perm) bad.emplace_back("finite_game.player_streams");
  }
  if (!bad.empty()) {
    std::string list;
    for (const auto& k : bad) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("invalid finite-game settings: " + list, bad);
  }
}

namespace {

struct RunNoise {
  std::vector<double> z0;
  std::vector<std::vector<double>> dW;  // [n][player]
};

RunNoise run_noise(const FiniteGameConfig& cfg, const TimeGrid& grid, std::size_t run) {
  const std::size_t N = cfg.players;
  RunNoise rn;
  rn.z0.resize(N);
  rn.dW.assign(grid.steps, std::vector<double>(N));
  const double sqrt_dt = std::sqrt(grid.dt());
  for (std::size_t j = 0; j < N; ++j) {
    const std::uint64_t stream = cfg.player_streams.empty() ? j : cfg.player_streams[j];
    std::mt19937_64 rng(derive_seed(cfg.seed, run + 1, stream));
    std::normal_distribution<double> normal;
    rn.z0[j] = normal(rng);
    for (std::size_t n = 0; n < grid.steps; ++n) rn.dW[n][j] = sqrt_dt * normal(rng);
  }
  return rn;
}

struct Deviation {
  enum Kind { none, major_shift, minor_shift, minor_policy } kind = none;
  double delta = 0.0;
  std::size_t player = 0;  // 0-based minor index
  const MinorPolicy* policy = nullptr;
};

struct RunRecord {
  std::vector<std::vector<double>>* X = nullptr;
  std::vector<std::vector<double>>* gamma = nullptr;
  std::vector<std::vector<double>>* alpha = nullptr;
  std::vector<double>* alpha0 = nullptr;
  // Leave-one-out statistics seen by these players, [k][n].
  const std::vector<std::size_t>* loo_players = nullptr;
  std::vector<std::vector<LambdaSummary>>* loo = nullptr;
  double* mean_gamma_gap = nullptr;
};

// Costs of one run: [0] major, [1 + j] minor j.
std::vector<double> simulate_run(const ModelSpec& model, const EquilibriumBundle& bundle,
                                 const TimeGrid& grid, const RunNoise& noise, const Deviation& dev,
                                 const RunRecord& rec) {
  const std::size_t N = noise.z0.size();
  const std::size_t M = grid.steps;
  const double dt = grid.dt();
  const double inv_n = 1.0 / static_cast<double>(N);
  const double inv_loo = 1.0 / static_cast<double>(N - 1);

  std::vector<double> x(N), g(N, bundle.startup.gamma), a(N), cost(N + 1, 0.0);
  const double sd = std::sqrt(bundle.startup.var_x);
  for (std::size_t j = 0; j < N; ++j) {
    x[j] = sd > 0.0 ? bundle.startup.mean_x + sd * noise.z0[j] : bundle.startup.mean_x;
  }
  if (rec.X) {
    rec.X->assign(grid.size(), {});
    rec.gamma->assign(grid.size(), {});
    rec.alpha->assign(grid.size(), {});
    rec.alpha0->assign(grid.size(), 0.0);
  }
  if (rec.loo) {
    rec.loo->assign(rec.loo_players->size(), std::vector<LambdaSummary>(grid.size()));
  }
  double gap = 0.0;

  std::vector<double> drift(N), vol(N);
  for (std::size_t n = 0; n <= M; ++n) {
    const double t = grid.time(n);
    const double sx = simd::sum(x);
    const double sg = simd::sum(g);
    const double s2 = simd::sum_squares(x) + simd::sum_squares(g);
    const LambdaSummary full = LambdaSummary::of(sx * inv_n, sg * inv_n, s2 * inv_n);
    gap = std::max(gap, std::fabs(full.mean_gamma - bundle.flow_summaries[n].mean_gamma));
    auto loo = [&](std::size_t j) {
      return LambdaSummary::of((sx - x[j]) * inv_loo, (sg - g[j]) * inv_loo,
                               (s2 - x[j] * x[j] - g[j] * g[j]) * inv_loo);
    };
    if (rec.loo) {
      for (std::size_t k = 0; k < rec.loo_players->size(); ++k) {
        (*rec.loo)[k][n] = loo((*rec.loo_players)[k]);
      }
    }

    // Minor feedback reads the candidate alpha0 path: other players stay frozen.
    const double a0_candidate = bundle.alpha0[n];
    double a0 = a0_candidate;
    if (dev.kind == Deviation::major_shift) a0 = model.major_actions.project(a0 + dev.delta);
    for (std::size_t j = 0; j < N; ++j) {
      const bool deviator = j == dev.player;
      if (deviator && dev.kind == Deviation::minor_policy) {
        a[j] = dev.policy->action(model, n, x[j], g[j]);
      } else {
        a[j] = bundle.minor_action(model, n, x[j], g[j], a0_candidate);
      }
      if (deviator && dev.kind == Deviation::minor_shift) {
        a[j] = model.minor_actions.project(a[j] + dev.delta);
      }
    }
    if (rec.X) {
      (*rec.X)[n] = x;
      (*rec.gamma)[n] = g;
      (*rec.alpha)[n] = a;
      (*rec.alpha0)[n] = a0;
    }

    if (n == M) {
      cost[0] += model.term_cost_major(full);
      for (std::size_t j = 0; j < N; ++j) cost[1 + j] += model.term_cost_minor(x[j], g[j], loo(j));
      break;
    }
    cost[0] += dt * model.run_cost_major(t, a0, full);
    for (std::size_t j = 0; j < N; ++j) {
      const State s{t, x[j], g[j]};
      const LambdaSummary lj = loo(j);
      cost[1 + j] += dt * model.run_cost_minor(s, a0, a[j], lj);
      drift[j] = model.drift(s, a0, a[j], lj);
      vol[j] = model.vol(s);
    }
    simd::euler_update(x, drift, vol, noise.dW[n], dt);
    simd::axpy(g, dt, a);
  }
  if (rec.mean_gamma_gap) *rec.mean_gamma_gap = gap;
  return cost;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  r.mean = simd::mean(v);
  if (v.size() < 2) return r;
  std::vector<double> c(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) c[k] = v[k] - r.mean;
  const double var = simd::sum_squares(c) / static_cast<double>(v.size() - 1);
  r.se = std::sqrt(var / static_cast<double>(v.size()));
  return r;
}

TimeGrid game_grid(const EquilibriumBundle& bundle, const FiniteGameConfig& cfg) {
  if (cfg.grid && !(*cfg.grid == bundle.grid)) {
    throw PreconditionError("finite game: grid differs from the bundle's grid");
  }
  return bundle.grid;
}

void check_bundle(const ModelSpec& model, const EquilibriumBundle& bundle) {
  if (bundle.model != model.name) {
    throw PreconditionError("finite game: bundle was solved for model '" + bundle.model + "'");
  }
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t j) {
  std::vector<double> c(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) c[r] = rows[r][j];
  return c;
}

}  // namespace

FiniteGameResult simulate_finite_game(const ModelSpec& model, const EquilibriumBundle& bundle,
                                      const FiniteGameConfig& cfg) {
  cfg.validate();
  check_bundle(model, bundle);
  const TimeGrid grid = game_grid(bundle, cfg);
  FiniteGameResult res;
  res.players = cfg.players;
  res.mc_runs = cfg.mc_runs;
  res.run_costs.assign(cfg.mc_runs, {});
  std::vector<double> gaps(cfg.mc_runs, 0.0);

  parallel_for(cfg.mc_runs, cfg.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      const RunNoise noise = run_noise(cfg, grid, r);
      RunRecord rec;
      rec.mean_gamma_gap = &gaps[r];
      if (r == 0) {
        rec.X = &res.X;
        rec.gamma = &res.gamma;
        rec.alpha = &res.alpha;
        rec.alpha0 = &res.alpha0;
      }
      res.run_costs[r] = simulate_run(model, bundle, grid, noise, Deviation{}, rec);
    }
  });

  const MeanSe j0 = mean_se(column(res.run_costs, 0));
  res.J0 = j0.mean;
  res.J0_se = j0.se;
  for (std::size_t j = 1; j <= cfg.players; ++j) {
    const MeanSe ji = mean_se(column(res.run_costs, j));
    res.Ji.push_back(ji.mean);
    res.Ji_se.push_back(ji.se);
  }
  const MeanSe gg = mean_se(gaps);
  res.mean_gamma_gap = gg.mean;
  res.mean_gamma_gap_se = gg.se;
  return res;
}

NashGapReport estimate_eps_nash(const ModelSpec& model, const EquilibriumBundle& bundle,
                                const FiniteGameConfig& cfg) {
  cfg.validate();
  check_bundle(model, bundle);
  const TimeGrid grid = game_grid(bundle, cfg);
  const std::size_t R = cfg.mc_runs;
  const std::size_t N = cfg.players;

  std::vector<std::size_t> sampled;
  const std::size_t k_count = std::min(cfg.deviations.sampled_players, N);
  for (std::size_t k = 0; k < k_count; ++k) sampled.push_back(k * N / k_count);

  // Candidate profile, recording the flow each sampled player faces.
  std::vector<std::vector<double>> cand(R);
  std::vector<std::vector<std::vector<LambdaSummary>>> loo(R);
  parallel_for(R, cfg.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      const RunNoise noise = run_noise(cfg, grid, r);
      RunRecord rec;
      rec.loo_players = &sampled;
      rec.loo = &loo[r];
      cand[r] = simulate_run(model, bundle, grid, noise, Deviation{}, rec);
    }
  });

  std::vector<Deviation> devs;
  for (double d : cfg.deviations.major_shifts) devs.push_back({Deviation::major_shift, d, N, nullptr});
  std::vector<MinorPolicy> policies;
  policies.reserve(sampled.size());
  for (std::size_t k = 0; k < sampled.size(); ++k) {
    for (double d : cfg.deviations.minor_shifts) {
      devs.push_back({Deviation::minor_shift, d, sampled[k], nullptr});
    }
    if (cfg.deviations.best_response) {
      std::vector<LambdaSummary> frozen(grid.size());
      for (std::size_t n = 0; n < grid.size(); ++n) {
        std::vector<double> mx(R), mg(R), m2(R);
        for (std::size_t r = 0; r < R; ++r) {
          mx[r] = loo[r][k][n].mean_x;
          mg[r] = loo[r][k][n].mean_gamma;
          m2[r] = loo[r][k][n].second_moment;
        }
        frozen[n] = LambdaSummary::of(simd::mean(mx), simd::mean(mg), simd::mean(m2));
      }
      SolverConfig sc = cfg.best_response_solver;
      sc.seed = derive_seed(cfg.seed, 0x6272, sampled[k]);
      policies.push_back(
          solve_minor_best_response(model, sc, grid, bundle.alpha0, frozen, bundle.startup));
      devs.push_back({Deviation::minor_policy, 0.0, sampled[k], &policies.back()});
    }
  }

  // gains[d][r]: candidate cost minus deviation cost of the deviator.
  std::vector<std::vector<double>> gains(devs.size(), std::vector<double>(R));
  std::vector<std::vector<double>> dev_costs(devs.size(), std::vector<double>(R));
  parallel_for(R, cfg.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      const RunNoise noise = run_noise(cfg, grid, r);
      for (std::size_t d = 0; d < devs.size(); ++d) {
        const auto costs = simulate_run(model, bundle, grid, noise, devs[d], RunRecord{});
        const std::size_t who = devs[d].kind == Deviation::major_shift ? 0 : 1 + devs[d].player;
        dev_costs[d][r] = costs[who];
        gains[d][r] = cand[r][who] - costs[who];
      }
    }
  });

  NashGapReport rep;
  rep.players = N;
  rep.mc_runs = R;
  rep.run_costs = cand;
  const MeanSe j0 = mean_se(column(cand, 0));
  rep.J0_hat = j0.mean;
  rep.J0_se = j0.se;
  for (std::size_t j = 1; j <= N; ++j) {
    const MeanSe ji = mean_se(column(cand, j));
    rep.Ji_hat.push_back(ji.mean);
    rep.Ji_se.push_back(ji.se);
  }
  for (std::size_t d = 0; d < devs.size(); ++d) {
    DeviationResult dr;
    const bool major = devs[d].kind == Deviation::major_shift;
    dr.who = major ? "major" : "minor";
    dr.player = major ? 0 : 1 + devs[d].player;
    dr.kind = devs[d].kind == Deviation::minor_policy ? "best_response" : "shift";
    dr.delta = devs[d].delta;
    dr.mean_cost = simd::mean(dev_costs[d]);
    const MeanSe g = mean_se(gains[d]);
    dr.gain = g.mean;
    dr.gain_se = g.se;
    double& eps = major ? rep.eps_major : rep.eps_minor_max;
    double& eps_se = major ? rep.eps_major_se : rep.eps_minor_se;
    if (g.mean > eps) {
      eps = g.mean;
      eps_se = g.se;
    }
    rep.deviations.push_back(dr);
  }
  return rep;
}

std::string report_to_json(const NashGapReport& r) {
  using ojson = nlohmann::ordered_json;
  ojson devs = ojson::array();
  for (const auto& d : r.deviations) {
    devs.push_back({{"who", d.who},
                    {"player", d.player},
                    {"kind", d.kind},
                    {"delta", d.delta},
                    {"mean_cost", d.mean_cost},
                    {"gain", d.gain},
                    {"gain_se", d.gain_se}});
  }
  ojson doc{{"spec_version", kSpecVersion},
            {"players", r.players},
            {"mc_runs", r.mc_runs},
            {"J0_hat", r.J0_hat},
            {"J0_se", r.J0_se},
            {"Ji_hat", r.Ji_hat},
            {"Ji_se", r.Ji_se},
            {"eps_major", r.eps_major},
            {"eps_major_se", r.eps_major_se},
            {"eps_minor_max", r.eps_minor_max},
            {"eps_minor_se", r.eps_minor_se},
            {"deviations", devs}};
  return doc.dump(2) + "\n";
}

std::string run_costs_csv(const std::vector<std::vector<double>>& run_costs) {
  std::string out = "run,player,cost\n";
  char buf[64];
  for (std::size_t r = 0; r < run_costs.size(); ++r) {
    for (std::size_t j = 0; j < run_costs[r].size(); ++j) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", r, j, run_costs[r][j]);
      out += buf;
    }
  }
  return out;
}

}  // namespace mmfg
