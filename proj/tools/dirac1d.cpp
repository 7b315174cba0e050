#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "dirac1d/run.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int jobs = 0;
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "run configuration (JSON)")
      ->required();
  cmd->add_option("--out", a.out_dir, "output directory (overrides config)");
  cmd->add_option("--jobs", a.jobs, "worker count (overrides config)");
  cmd->add_flag("--verbose", a.verbose, "chatty progress output");
}

int dispatch(const std::string& name, const CommonArgs& a) {
  dirac1d::cli::RunConfig cfg;
  try {
    cfg = dirac1d::cli::load_config(a.config_path);
  } catch (const dirac1d::cli::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  dirac1d::cli::apply_env_overrides(cfg);
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (a.jobs >= 1) cfg.jobs = a.jobs;

  if (name == "solve") return dirac1d::cli::run_solve(cfg, std::cout, a.verbose);
  if (name == "sweep") return dirac1d::cli::run_sweep(cfg, std::cout, a.verbose);
  if (name == "thirring")
    return dirac1d::cli::run_thirring(cfg, std::cout, a.verbose);
  if (name == "oracle")
    return dirac1d::cli::run_oracle(cfg, std::cout, a.verbose);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dirac1d: bound states of the 1D Dirac equation in finite symmetric "
      "scalar potentials, with confinement certificates"};
  app.require_subcommand(1);

  CommonArgs args;
  const char* names[] = {"solve", "sweep", "thirring", "oracle"};
  const char* descs[] = {
      "solve one potential, certify every bound state",
      "sweep a potential parameter, emit certified CSV rows",
      "self-consistent Thirring-type run with certificate",
      "regenerate square-well oracle fixtures and diff against the committed "
      "table"};
  for (int i = 0; i < 4; ++i) add_common(app.add_subcommand(names[i], descs[i]), args);

  CLI11_PARSE(app, argc, argv);

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    return dispatch(sub, args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
