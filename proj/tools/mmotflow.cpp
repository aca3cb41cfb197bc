// mmotflow: run continuation experiments for symmetric multi-marginal
// entropic transport and the Euler chain.
//
//   mmotflow run config.ini [--out DIR] [--threads K]
//   mmotflow validate config.ini
//
// Exit codes: 0 success, 1 usage, 2 configuration error, 3 solver error.

#include "mmot/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  using namespace mmot;
  CLI::App app{"Continuation solver for multi-marginal entropic optimal transport"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: hardware concurrency)")
      ->check(CLI::PositiveNumber);

  std::string run_config, validate_config, out_dir;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", run_config, "config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides [output] dir)");
  auto* check = app.add_subcommand("validate", "check a config file without running it");
  check->add_option("config", validate_config, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  if (threads > 0) set_num_threads(threads);

  try {
    if (*check) {
      cli::validate(cli::load_config(validate_config));
      std::cout << validate_config << ": ok\n";
      return 0;
    }
    auto cfg = cli::load_config(run_config);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    const auto res = cli::run_experiment(cfg, cfg.out_dir);
    std::cout << res.summary << '\n';
    return 0;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
