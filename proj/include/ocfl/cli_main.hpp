#pragma once

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ocfl/cli.hpp"

namespace ocfl {

// Exit codes: 0 ok, 2 config error (bad flags, bad config file), 3 runtime error.
inline int cli_main(std::vector<std::string> args) {
  CLI::App app{"one-shot clustered federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed_override;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed_override, "root seed, overrides the config");

  CLI::App* c_partition = app.add_subcommand("partition", "generate and persist a partition");
  CLI::App* c_run = app.add_subcommand("run", "run every configured method, write telemetry");
  CLI::App* c_sweep = app.add_subcommand("sweep", "compare methods on one shared partition");
  c_partition->fallthrough();
  c_run->fallthrough();
  c_sweep->fallthrough();
  std::vector<std::string> sweep_methods;
  c_sweep->add_option("--methods", sweep_methods, "method names to sweep")->delimiter(',');
  CLI::App* c_plot = app.add_subcommand("plotdata", "emit plot-ready CSVs from a run directory");
  c_plot->fallthrough();
  std::string run_dir;
  c_plot->add_option("run_dir", run_dir, "directory holding one method's telemetry")->required();

  // CLI11 wants argv order reversed
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_plot->parsed()) {
      std::filesystem::path in = run_dir;
      std::filesystem::path out = out_dir.empty() ? in : std::filesystem::path(out_dir);
      return cmd_plotdata(in, out);
    }

    if (config_path.empty()) {
      std::cerr << "error: --config is required\n";
      return 2;
    }
    ExperimentConfig cfg;
    try {
      cfg = load_config(config_path);
      if (seed_override) {
        cfg.seed = *seed_override;
        cfg.validate();
      }
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
    std::filesystem::path out = out_dir.empty() ? std::filesystem::path(cfg.output_dir)
                                                : std::filesystem::path(out_dir);

    if (c_partition->parsed()) return cmd_partition(cfg, out);
    if (c_run->parsed()) return cmd_run(cfg, out);
    if (c_sweep->parsed()) return cmd_sweep(cfg, sweep_methods, out);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace ocfl
