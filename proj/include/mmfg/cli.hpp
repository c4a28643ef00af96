#pragma once

// Configuration, artifacts and command dispatch behind the `mmfg` tool.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmfg/fbsde.hpp"
#include "mmfg/mfg.hpp"
#include "mmfg/nplayer.hpp"

namespace mmfg::cli {

struct RunConfig {
  std::string command;

  std::string model = "example1";
  double kappa = 1.0;
  double sigma = 0.2;
  // "t0:v0,t1:v1,..." piecewise-constant sigma; overrides `sigma` when set.
  std::string sigma_schedule;
  double horizon = 1.0;
  double x0 = 0.0;
  double x0_std = 0.0;
  double gamma0 = 0.0;

  MFGConfig mfg;
  FiniteGameConfig game;
  std::string bundle_path;

  double verify_tolerance = 1e-8;
  double verify_window_start = 0.0;
  std::size_t verify_particle_stride = 1;

  std::string output_dir = "out";

  ExampleOptions example_options() const;
  ModelSpec make_model() const;
};

/// Parses INI text ("key = value" lines under [section] headers). Unknown
/// keys, malformed values and out-of-range fields raise ConfigError listing
/// the offending keys.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Every key with its default value, in the accepted file format.
std::string defaults_text();

nlohmann::ordered_json config_echo(const RunConfig& cfg);

struct TrajectoryRow {
  double t = 0.0;
  double alpha0 = 0.0;
  double mean_x = 0.0;
  double mean_gamma = 0.0;
  double mean_P = 0.0;
  double mean_Pgrave = 0.0;
  double mean_Y = 0.0;
  double mean_Ygrave = 0.0;
};

inline const char* kTrajectoryHeader = "t,alpha0,mean_x,mean_gamma,mean_P,mean_Pgrave,mean_Y,mean_Ygrave";

std::vector<TrajectoryRow> rows_from_paths(const FBSDEPaths& paths);
std::vector<TrajectoryRow> rows_from_ode(const MeanFieldOdeResult& ode);
std::string trajectories_csv(const std::vector<TrajectoryRow>& rows);
/// Throws IoError naming the first malformed line.
std::vector<TrajectoryRow> parse_trajectories_csv(const std::string& text);

/// Long-format (t, series, value) rows, with oracle series appended when the
/// model has closed forms.
std::string plot_data_csv(const std::vector<TrajectoryRow>& rows, const ModelSpec* model);

/// Writes through a temporary file and an atomic rename.
void write_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

struct CliOptions {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  bool print_defaults = false;
  std::optional<std::string> emit_plot_data;
};

enum ExitCode { kOk = 0, kValidation = 1, kSolverFailure = 2, kIo = 3 };

/// Runs one command end to end and returns the process exit code. On failure
/// an error document is written to <output>/error.json and to stderr.
int run(const CliOptions& opts);

/// Executes a parsed config (no flag handling); throws on failure.
void execute(const RunConfig& cfg);

}  // namespace mmfg::cli
