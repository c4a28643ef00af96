#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "mmfg/cli.hpp"
#include "mmfg/errors.hpp"
#include "mmfg/hamiltonian.hpp"
#include "mmfg/simd.hpp"

namespace mmfg::cli {
namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string out_path(const RunConfig& c, const char* name) {
  return (fs::path(c.output_dir) / name).string();
}

ojson base_summary(const RunConfig& c) {
  return ojson{{"spec_version", kSpecVersion},
               {"command", c.command},
               {"model", c.model},
               {"seed", c.mfg.solver.seed},
               {"status", "ok"}};
}

void finish_summary(const RunConfig& c, ojson& s, double seconds) {
  s["timings"] = {{"total_seconds", seconds}};
  s["config"] = config_echo(c);
  write_atomic(out_path(c, "summary.json"), s.dump(2) + "\n");
}

ojson report_json(const NecessaryConditionReport& r) {
  return {{"max_violation", r.max_violation},
          {"major_violation", r.major_violation},
          {"minor_violation", r.minor_violation},
          {"major_time_index", r.major_time_index},
          {"minor_time_index", r.minor_time_index},
          {"minor_particle", r.minor_particle},
          {"tolerance", r.tolerance},
          {"passed", r.passed}};
}

struct Solved {
  MFGSolution solution;
  EquilibriumBundle bundle;
};

Solved solve_and_export(const RunConfig& c, const ModelSpec& model) {
  MFGSolution sol = solve_mmmfg(model, c.mfg);
  const DecouplingFields fields = fit_decoupling_fields(sol, c.mfg.solver.degree);
  EquilibriumBundle b = export_equilibrium(model, sol, fields, config_echo(c).dump());
  return {std::move(sol), std::move(b)};
}

void write_solution(const RunConfig& c, const ModelSpec& model, const Solved& s, ojson& summary) {
  const auto rows = rows_from_paths(s.solution.fbsde);
  write_atomic(out_path(c, "trajectories.csv"), trajectories_csv(rows));
  write_atomic(out_path(c, "plot_data.csv"), plot_data_csv(rows, &model));
  write_atomic(out_path(c, "bundle.json"), bundle_to_json(s.bundle));
  summary["residuals"] = {{"picard", s.solution.fbsde.picard_residuals},
                          {"fixed_point", s.solution.fixed_point_residuals}};
  summary["picard_iterations"] = s.solution.fbsde.picard_iterations;
  summary["inner_iterations"] = s.solution.inner_iterations;
  summary["flow_updates"] = s.solution.flow_updates;
  summary["min_regression_r2"] =
      *std::min_element(s.solution.fbsde.regression_r2.begin(), s.solution.fbsde.regression_r2.end());
  VerifyOptions vo;
  vo.particle_stride = c.verify_particle_stride;
  vo.tolerance = 1e-4;
  summary["necessary_conditions"] =
      report_json(verify_necessary_conditions(model, s.solution.fbsde, s.solution.alpha0,
                                              s.solution.fbsde.alpha, vo));
}

void cmd_solve(const RunConfig& c, const ModelSpec& model, ojson& summary) {
  const Solved s = solve_and_export(c, model);
  write_solution(c, model, s, summary);
}

void cmd_verify(const RunConfig& c, const ModelSpec& model, ojson& summary) {
  const Solved s = solve_and_export(c, model);
  write_solution(c, model, s, summary);
  const FBSDEPaths& p = s.solution.fbsde;

  std::vector<double> ref_a0(p.grid.size()), ref_a(p.grid.size()), ref_mg(p.grid.size());
  std::string reference;
  if (model.oracle) {
    reference = "oracle";
    for (std::size_t n = 0; n < p.grid.size(); ++n) {
      const double t = p.grid.time(n);
      ref_a0[n] = model.oracle->alpha0(t);
      ref_a[n] = model.oracle->alpha(t);
      ref_mg[n] = model.oracle->mean_gamma(t);
    }
  } else {
    reference = "mean_field_ode";
    const auto ode = mean_field_ode_solve(model, p.grid, c.mfg.solver.ode_substeps);
    ref_a0 = ode.alpha0;
    ref_a = ode.alpha;
    ref_mg = ode.mean_gamma;
  }

  double a0_abs = 0, a0_rel = 0, a_abs = 0, mg_abs = 0, mg_rel = 0;
  for (std::size_t n = 0; n < p.grid.size(); ++n) {
    if (p.grid.time(n) < c.verify_window_start) continue;
    const double e0 = std::fabs(p.alpha0[n] - ref_a0[n]);
    a0_abs = std::max(a0_abs, e0);
    a0_rel = std::max(a0_rel, e0 / std::max(std::fabs(ref_a0[n]), kMeanFloor));
    for (double a : p.alpha[n]) a_abs = std::max(a_abs, std::fabs(a - ref_a[n]));
    const double eg = std::fabs(simd::mean(p.gamma[n]) - ref_mg[n]);
    mg_abs = std::max(mg_abs, eg);
    mg_rel = std::max(mg_rel, eg / std::max(std::fabs(ref_mg[n]), kMeanFloor));
  }
  summary["reference"] = reference;
  summary["window_start"] = c.verify_window_start;
  summary["alpha0_max_abs_err"] = a0_abs;
  summary["alpha0_max_rel_err"] = a0_rel;
  summary["alpha_max_abs_err"] = a_abs;
  summary["mean_gamma_max_abs_err"] = mg_abs;
  summary["mean_gamma_max_rel_err"] = mg_rel;
  summary["tolerance"] = c.verify_tolerance;
  summary["passed"] = a0_abs <= c.verify_tolerance && a_abs <= c.verify_tolerance;
}

void cmd_ode(const RunConfig& c, const ModelSpec& model, ojson& summary) {
  const TimeGrid grid = c.mfg.solver.grid(model);
  const auto ode = mean_field_ode_solve(model, grid, c.mfg.solver.ode_substeps);
  const auto rows = rows_from_ode(ode);
  write_atomic(out_path(c, "trajectories.csv"), trajectories_csv(rows));
  write_atomic(out_path(c, "plot_data.csv"), plot_data_csv(rows, &model));
  summary["p0"] = ode.p0;
  summary["shooting_iterations"] = ode.shooting_iterations;
  if (model.oracle) {
    double rel = 0.0;
    for (std::size_t n = 0; n < ode.t.size(); ++n) {
      const double ref = model.oracle->mean_gamma(ode.t[n]);
      rel = std::max(rel, std::fabs(ode.mean_gamma[n] - ref) / std::max(std::fabs(ref), kMeanFloor));
    }
    summary["mean_gamma_max_rel_err"] = rel;
  }
}

EquilibriumBundle obtain_bundle(const RunConfig& c, const ModelSpec& model, ojson& summary) {
  if (!c.bundle_path.empty()) {
    summary["bundle_source"] = c.bundle_path;
    return bundle_from_json(read_file(c.bundle_path));
  }
  Solved s = solve_and_export(c, model);
  write_solution(c, model, s, summary);
  summary["bundle_source"] = "solved";
  return std::move(s.bundle);
}

void cmd_finite_game(const RunConfig& c, const ModelSpec& model, ojson& summary) {
  const EquilibriumBundle b = obtain_bundle(c, model, summary);
  const FiniteGameResult r = simulate_finite_game(model, b, c.game);
  write_atomic(out_path(c, "costs.csv"), run_costs_csv(r.run_costs));
  summary["finite_game"] = {{"players", r.players},
                            {"mc_runs", r.mc_runs},
                            {"J0_hat", r.J0},
                            {"J0_se", r.J0_se},
                            {"Ji_hat", r.Ji},
                            {"Ji_se", r.Ji_se},
                            {"mean_gamma_gap", r.mean_gamma_gap},
                            {"mean_gamma_gap_se", r.mean_gamma_gap_se}};
}

void cmd_nash_gap(const RunConfig& c, const ModelSpec& model, ojson& summary) {
  const EquilibriumBundle b = obtain_bundle(c, model, summary);
  const NashGapReport r = estimate_eps_nash(model, b, c.game);
  write_atomic(out_path(c, "costs.csv"), run_costs_csv(r.run_costs));
  write_atomic(out_path(c, "nash_gap.json"), report_to_json(r));
  summary["eps_major"] = r.eps_major;
  summary["eps_major_se"] = r.eps_major_se;
  summary["eps_minor_max"] = r.eps_minor_max;
  summary["eps_minor_se"] = r.eps_minor_se;
  summary["J0_hat"] = r.J0_hat;
  summary["J0_se"] = r.J0_se;
}

int exit_code_for(const Error& e) {
  const std::string& k = e.kind();
  if (k == "validation" || k == "precondition") return kValidation;
  if (k == "io") return kIo;
  return kSolverFailure;
}

void report_error(const std::string& output_dir, const ojson& doc) {
  const std::string text = doc.dump(2) + "\n";
  std::cerr << text;
  if (output_dir.empty()) return;
  try {
    write_atomic((fs::path(output_dir) / "error.json").string(), text);
  } catch (const Error&) {
    // stderr already carries the document
  }
}

}  // namespace

void execute(const RunConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  const ModelSpec model = c.make_model();
  ojson summary = base_summary(c);
  if (c.command == "solve-mfg") {
    cmd_solve(c, model, summary);
  } else if (c.command == "verify-example") {
    cmd_verify(c, model, summary);
  } else if (c.command == "mean-field-ode") {
    cmd_ode(c, model, summary);
  } else if (c.command == "finite-game") {
    cmd_finite_game(c, model, summary);
  } else if (c.command == "nash-gap") {
    cmd_nash_gap(c, model, summary);
  } else {
    throw ConfigError("unknown command '" + c.command + "'", {"command"});
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  finish_summary(c, summary, secs);
}

int run(const CliOptions& opts) {
  if (opts.print_defaults) {
    std::cout << defaults_text();
    return kOk;
  }
  std::string output_dir = opts.output.value_or("");
  try {
    if (opts.emit_plot_data && !opts.config_path) {
      const auto rows = parse_trajectories_csv(read_file(*opts.emit_plot_data));
      const fs::path dir = opts.output ? fs::path(*opts.output)
                                       : fs::path(*opts.emit_plot_data).parent_path();
      write_atomic((dir / "plot_data.csv").string(), plot_data_csv(rows, nullptr));
      return kOk;
    }
    if (!opts.config_path) throw ConfigError("--config is required", {"--config"});
    RunConfig cfg = load_config(*opts.config_path);
    if (opts.seed) {
      cfg.mfg.solver.seed = *opts.seed;
      cfg.game.seed = *opts.seed;
    }
    if (opts.output) cfg.output_dir = *opts.output;
    output_dir = cfg.output_dir;
    if (opts.emit_plot_data) {
      const ModelSpec model = cfg.make_model();
      const auto rows = parse_trajectories_csv(read_file(*opts.emit_plot_data));
      write_atomic((fs::path(cfg.output_dir) / "plot_data.csv").string(), plot_data_csv(rows, &model));
      return kOk;
    }
    execute(cfg);
    return kOk;
  } catch (const Error& e) {
    ojson doc{{"spec_version", kSpecVersion},
              {"status", "error"},
              {"kind", e.kind()},
              {"message", e.what()}};
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) doc["keys"] = ce->keys();
    if (const auto* ne = dynamic_cast<const NonConvergenceError*>(&e)) doc["residuals"] = ne->residuals();
    report_error(output_dir, doc);
    return exit_code_for(e);
  } catch (const std::exception& e) {
    ojson doc{{"spec_version", kSpecVersion},
              {"status", "error"},
              {"kind", "internal"},
              {"message", e.what()}};
    report_error(output_dir, doc);
    return kSolverFailure;
  }
}

}  // namespace mmfg::cli
