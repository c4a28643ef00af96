#include "CLI11.hpp"
#include "mmfg/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Major/minor mean field game solver"};
  mmfg::cli::CliOptions opts;
  std::string config, output, plot;
  std::uint64_t seed = 0;
  auto* c = app.add_option("--config", config, "INI run configuration");
  auto* s = app.add_option("--seed", seed, "Seed overriding [solver] seed");
  auto* o = app.add_option("--output", output, "Output directory overriding [output] dir");
  app.add_flag("--print-defaults", opts.print_defaults, "Print every config key with its default");
  auto* p = app.add_option("--emit-plot-data", plot,
                           "Convert a trajectories.csv into long-format plot_data.csv");
  CLI11_PARSE(app, argc, argv);
  if (c->count()) opts.config_path = config;
  if (s->count()) opts.seed = seed;
  if (o->count()) opts.output = output;
  if (p->count()) opts.emit_plot_data = plot;
  return mmfg::cli::run(opts);
}
