#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mmfg/cli.hpp"
#include "mmfg/errors.hpp"

namespace mmfg::cli {
namespace {

namespace pt = boost::property_tree;

const std::set<std::string> kCommands = {"solve-mfg", "verify-example", "mean-field-ode",
                                         "finite-game", "nash-gap"};

const std::map<std::string, std::set<std::string>> kKeys = {
    {"", {"command"}},
    {"model", {"name", "kappa", "sigma", "sigma_schedule", "horizon", "x0", "x0_std", "gamma0"}},
    {"solver",
     {"particles", "steps", "t_min", "seed", "degree", "threads", "picard_max_iter", "picard_tol",
      "picard_damping", "ode_substeps", "minimizer"}},
    {"mfg", {"fp_tol", "damping", "max_iter"}},
    {"finite_game",
     {"players", "mc_runs", "major_shifts", "minor_shifts", "best_response", "sampled_players",
      "best_response_particles", "bundle"}},
    {"verify", {"tolerance", "window_start", "particle_stride"}},
    {"output", {"dir"}},
};

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    std::string s = *v;
    const auto b = s.find_first_not_of(" \t\"");
    const auto e = s.find_last_not_of(" \t\"");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  void str(const std::string& key, std::string& out) const {
    if (auto v = raw(key)) out = *v;
  }

  void real(const std::string& key, double& out) {
    auto v = raw(key);
    if (!v) return;
    try {
      std::size_t pos = 0;
      const double d = std::stod(*v, &pos);
      if (pos != v->size() || !std::isfinite(d)) throw std::invalid_argument(key);
      out = d;
    } catch (const std::exception&) {
      bad_.push_back(key);
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int& out, long long lo) {
    auto v = raw(key);
    if (!v) return;
    try {
      std::size_t pos = 0;
      const long long k = std::stoll(*v, &pos);
      if (pos != v->size() || k < lo) throw std::invalid_argument(key);
      out = static_cast<Int>(k);
    } catch (const std::exception&) {
      bad_.push_back(key);
    }
  }

  void u64(const std::string& key, std::uint64_t& out) {
    auto v = raw(key);
    if (!v) return;
    try {
      std::size_t pos = 0;
      if (!v->empty() && (*v)[0] == '-') throw std::invalid_argument(key);
      out = std::stoull(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      bad_.push_back(key);
    }
  }

  void boolean(const std::string& key, bool& out) {
    auto v = raw(key);
    if (!v) return;
    if (*v == "true" || *v == "1" || *v == "yes") {
      out = true;
    } else if (*v == "false" || *v == "0" || *v == "no") {
      out = false;
    } else {
      bad_.push_back(key);
    }
  }

  void reals(const std::string& key, std::vector<double>& out) {
    auto v = raw(key);
    if (!v) return;
    std::vector<double> vals;
    std::stringstream ss(*v);
    std::string item;
    try {
      while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        const auto b = item.find_first_not_of(' ');
        item = b == std::string::npos ? "" : item.substr(b);
        vals.push_back(std::stod(item, &pos));
        if (pos != item.size()) throw std::invalid_argument(key);
      }
      out = vals;
    } catch (const std::exception&) {
      bad_.push_back(key);
    }
  }

  void flag(const std::string& key) { bad_.push_back(key); }
  const std::vector<std::string>& bad() const { return bad_; }

 private:
  const pt::ptree& tree_;
  std::vector<std::string> bad_;
};

std::string join(const std::vector<std::string>& keys) {
  std::string s;
  for (const auto& k : keys) s += (s.empty() ? "" : ", ") + k;
  return s;
}

SigmaSchedule parse_schedule(const std::string& text) {
  std::vector<double> starts, values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("schedule");
    starts.push_back(std::stod(item.substr(0, colon)));
    values.push_back(std::stod(item.substr(colon + 1)));
  }
  return SigmaSchedule::piecewise(starts, values);
}

}  // namespace

ExampleOptions RunConfig::example_options() const {
  ExampleOptions o;
  o.sigma = sigma_schedule.empty() ? SigmaSchedule::constant(sigma) : parse_schedule(sigma_schedule);
  o.horizon = horizon;
  o.initial = {x0, x0_std, gamma0};
  return o;
}

ModelSpec RunConfig::make_model() const { return mmfg::make_model(model, kappa, example_options()); }

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + std::string(e.what()), {"<syntax>"});
  }

  std::vector<std::string> unknown;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      if (!kKeys.at("").count(name) && !kKeys.count(name)) unknown.push_back(name);
      continue;
    }
    auto sec = kKeys.find(name);
    if (sec == kKeys.end() || name.empty()) {
      for (const auto& [k, _] : node) unknown.push_back(name + "." + k);
      continue;
    }
    for (const auto& [k, _] : node) {
      if (!sec->second.count(k)) unknown.push_back(name + "." + k);
    }
  }
  if (!unknown.empty()) throw ConfigError("config: unknown keys: " + join(unknown), unknown);

  RunConfig c;
  Reader r(tree);
  r.str("command", c.command);
  r.str("model.name", c.model);
  r.real("model.kappa", c.kappa);
  r.real("model.sigma", c.sigma);
  r.str("model.sigma_schedule", c.sigma_schedule);
  r.real("model.horizon", c.horizon);
  r.real("model.x0", c.x0);
  r.real("model.x0_std", c.x0_std);
  r.real("model.gamma0", c.gamma0);

  auto& s = c.mfg.solver;
  r.integer("solver.particles", s.particles, 2);
  r.integer("solver.steps", s.steps, 1);
  r.real("solver.t_min", s.t_min);
  r.u64("solver.seed", s.seed);
  r.integer("solver.degree", s.degree, 0);
  r.integer("solver.threads", s.threads, 1);
  r.integer("solver.picard_max_iter", s.picard.max_iter, 1);
  r.real("solver.picard_tol", s.picard.tol);
  r.real("solver.picard_damping", s.picard.damping);
  r.integer("solver.ode_substeps", s.ode_substeps, 1);
  if (auto m = r.raw("solver.minimizer")) {
    if (*m == "analytic" || *m == "automatic") {
      s.minimizer = MinimizerMode::automatic;
    } else if (*m == "numeric") {
      s.minimizer = MinimizerMode::numeric;
    } else {
      r.flag("solver.minimizer");
    }
  }

  r.real("mfg.fp_tol", c.mfg.fp_tol);
  r.real("mfg.damping", c.mfg.damping);
  r.integer("mfg.max_iter", c.mfg.max_iter, 1);

  auto& g = c.game;
  r.integer("finite_game.players", g.players, 2);
  r.integer("finite_game.mc_runs", g.mc_runs, 1);
  r.reals("finite_game.major_shifts", g.deviations.major_shifts);
  r.reals("finite_game.minor_shifts", g.deviations.minor_shifts);
  r.boolean("finite_game.best_response", g.deviations.best_response);
  r.integer("finite_game.sampled_players", g.deviations.sampled_players, 1);
  r.integer("finite_game.best_response_particles", g.best_response_solver.particles, 2);
  r.str("finite_game.bundle", c.bundle_path);

  r.real("verify.tolerance", c.verify_tolerance);
  r.real("verify.window_start", c.verify_window_start);
  r.integer("verify.particle_stride", c.verify_particle_stride, 1);
  r.str("output.dir", c.output_dir);

  std::vector<std::string> bad = r.bad();
  if (!kCommands.count(c.command)) bad.push_back("command");
  if (c.model != "example1" && c.model != "example2" && c.model != "example3") {
    bad.push_back("model.name");
  }
  if (!(c.horizon > 0.0)) bad.push_back("model.horizon");
  if (!(c.sigma >= 0.0)) bad.push_back("model.sigma");
  if (!(c.x0_std >= 0.0)) bad.push_back("model.x0_std");
  if (!c.sigma_schedule.empty()) {
    try {
      parse_schedule(c.sigma_schedule);
    } catch (const std::exception&) {
      bad.push_back("model.sigma_schedule");
    }
  }
  if (!(s.t_min >= 0.0 && s.t_min < c.horizon)) bad.push_back("solver.t_min");
  if (!(s.picard.tol > 0.0)) bad.push_back("solver.picard_tol");
  if (!(s.picard.damping > 0.0 && s.picard.damping <= 1.0)) bad.push_back("solver.picard_damping");
  if (s.degree > 8) bad.push_back("solver.degree");
  if (!(c.mfg.fp_tol > 0.0)) bad.push_back("mfg.fp_tol");
  if (!(c.mfg.damping > 0.0 && c.mfg.damping <= 1.0)) bad.push_back("mfg.damping");
  if (!(c.verify_tolerance > 0.0)) bad.push_back("verify.tolerance");
  if (c.output_dir.empty()) bad.push_back("output.dir");
  if (!bad.empty()) throw ConfigError("config: invalid values for " + join(bad), bad);

  g.seed = s.seed;
  g.threads = s.threads;
  g.best_response_solver.degree = s.degree;
  g.best_response_solver.threads = s.threads;
  g.best_response_solver.picard = s.picard;
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string defaults_text() {
  return R"(# command: solve-mfg | verify-example | mean-field-ode | finite-game | nash-gap
command = solve-mfg

[model]
# example1 | example2 | example3
name = example1
kappa = 1
sigma = 0.2
# piecewise-constant sigma as start:value pairs, e.g. 0:0.2,0.5:0.3
sigma_schedule =
horizon = 1
x0 = 0
x0_std = 0
gamma0 = 0

[solver]
particles = 10000
steps = 200
t_min = 0.01
seed = 1
degree = 2
threads = 1
picard_max_iter = 50
picard_tol = 0.001
picard_damping = 0.5
ode_substeps = 64
# analytic | numeric
minimizer = analytic

[mfg]
fp_tol = 0.05
damping = 0.5
max_iter = 30

[finite_game]
players = 20
mc_runs = 100
major_shifts = -0.5,-0.25,0,0.25,0.5
minor_shifts = -0.5,-0.25,0,0.25,0.5
best_response = true
sampled_players = 5
best_response_particles = 1000
# existing bundle.json; solved from [model]/[solver] when empty
bundle =

[verify]
tolerance = 1e-08
window_start = 0
particle_stride = 1

[output]
dir = out
)";
}

nlohmann::ordered_json config_echo(const RunConfig& c) {
  const auto& s = c.mfg.solver;
  const auto& g = c.game;
  return nlohmann::ordered_json{
      {"command", c.command},
      {"model",
       {{"name", c.model},
        {"kappa", c.kappa},
        {"sigma", c.sigma},
        {"sigma_schedule", c.sigma_schedule},
        {"horizon", c.horizon},
        {"x0", c.x0},
        {"x0_std", c.x0_std},
        {"gamma0", c.gamma0}}},
      {"solver",
       {{"particles", s.particles},
        {"steps", s.steps},
        {"t_min", s.t_min},
        {"seed", s.seed},
        {"degree", s.degree},
        {"picard_max_iter", s.picard.max_iter},
        {"picard_tol", s.picard.tol},
        {"picard_damping", s.picard.damping},
        {"ode_substeps", s.ode_substeps},
        {"minimizer", s.minimizer == MinimizerMode::numeric ? "numeric" : "analytic"}}},
      {"mfg", {{"fp_tol", c.mfg.fp_tol}, {"damping", c.mfg.damping}, {"max_iter", c.mfg.max_iter}}},
      {"finite_game",
       {{"players", g.players},
        {"mc_runs", g.mc_runs},
        {"major_shifts", g.deviations.major_shifts},
        {"minor_shifts", g.deviations.minor_shifts},
        {"best_response", g.deviations.best_response},
        {"sampled_players", g.deviations.sampled_players},
        {"best_response_particles", g.best_response_solver.particles},
        {"bundle", c.bundle_path}}},
      {"verify",
       {{"tolerance", c.verify_tolerance},
        {"window_start", c.verify_window_start},
        {"particle_stride", c.verify_particle_stride}}},
  };
}

}  // namespace mmfg::cli
