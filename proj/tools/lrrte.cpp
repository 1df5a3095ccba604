#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lrrte/experiment.hpp"
#include "lrrte/verify.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Low-rank soft-thresholded Richardson solver for the slab radiative transfer equation"};
  app.require_subcommand(1);

  std::string solve_config;
  std::optional<std::string> output_dir;
  std::optional<int> jobs;
  CLI::App* solve = app.add_subcommand("solve", "run a convergence study and write table, traces and summary");
  solve->add_option("config", solve_config, "JSON experiment config")->required();
  solve->add_option("--output-dir", output_dir, "overrides output_dir from the config");
  solve->add_option("--jobs", jobs, "rows solved in parallel");

  std::string verify_config;
  CLI::App* verify = app.add_subcommand("verify", "run the small-size dense-oracle property suites");
  verify->add_option("config", verify_config, "JSON experiment config")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lrrte::kExitInvalidConfig;
  }

  lrrte::ExperimentConfig cfg;
  try {
    cfg = lrrte::load_config(solve->parsed() ? solve_config : verify_config);
    if (output_dir) cfg.output_dir = *output_dir;
    if (jobs) {
      if (*jobs < 1) throw lrrte::ConfigError("--jobs must be at least 1");
      cfg.study.jobs = *jobs;
    }
  } catch (const std::exception& e) {
    std::cerr << lrrte::error_report("invalid_config", e.what()) << "\n";
    return lrrte::kExitInvalidConfig;
  }

  try {
    if (solve->parsed()) {
      const int code = lrrte::run_experiment(cfg, std::cout);
      if (code != lrrte::kExitOk) {
        std::cerr << lrrte::error_report("not_converged", "one or more rows failed or did not converge") << "\n";
      }
      return code;
    }
    const bool ok = lrrte::print_checks(lrrte::run_verify(cfg), std::cout);
    if (!ok) std::cerr << lrrte::error_report("verify_failed", "one or more property suites failed") << "\n";
    return ok ? lrrte::kExitOk : lrrte::kExitNotConverged;
  } catch (const std::exception& e) {
    std::cerr << lrrte::error_report("runtime_error", e.what()) << "\n";
    return lrrte::kExitNotConverged;
  }
}
