#include <CLI11.hpp>
#include <iostream>

#include "epnozzle/cli/commands.hpp"

namespace {

using epn::cli::RunConfig;

int run(int argc, char** argv) {
  CLI::App app{"Steady subsonic Euler-Poisson nozzle solver"};
  app.require_subcommand(1);
  std::string config_path, out_dir, grid;
  std::vector<double> amplitudes;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--grid", grid, "grid N1xN2 (overrides the config)");
  };
  CLI::App* background = app.add_subcommand("background", "solve the 1D background and plot it");
  CLI::App* solve = app.add_subcommand("solve", "run the outer iteration and write all fields");
  CLI::App* verify = app.add_subcommand("verify", "recompute residuals from written field files");
  CLI::App* sweep = app.add_subcommand("sweep", "solve once per amplitude and tabulate deviations");
  for (CLI::App* sub : {background, solve, verify, sweep}) add_common(sub);
  for (CLI::App* sub : {solve, verify})
    sub->add_option("--amplitude", amplitudes, "uniform amplitude of every perturbation channel")
        ->expected(1);
  sweep->add_option("--amplitude", amplitudes, "amplitude list (repeatable, replaces the config list)")
      ->expected(1, -1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : epn::cli::exit_config;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : epn::cli::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!grid.empty()) std::tie(cfg.n1, cfg.n2) = epn::cli::parse_grid(grid);
    if (!amplitudes.empty()) {
      if (*sweep) {
        cfg.sweep_amplitudes = amplitudes;
      } else {
        cfg.perturbation = epn::Perturbation::uniform(amplitudes.front());
      }
    }
    cfg.validate();

    if (*background) epn::cli::cmd_background(cfg, std::cout);
    if (*solve) epn::cli::cmd_solve(cfg, std::cout);
    if (*verify) epn::cli::cmd_verify(cfg, std::cout);
    if (*sweep) {
      for (const auto& row : epn::cli::cmd_sweep(cfg, std::cout))
        if (row.error) return epn::cli::exit_code_for(*row.error);
    }
    return epn::cli::exit_ok;
  } catch (const epn::Error& e) {
    std::cerr << "ep-nozzle: " << e.what() << "\n";
    return epn::cli::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "ep-nozzle: io_error: " << e.what() << "\n";
    return epn::cli::exit_io;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
