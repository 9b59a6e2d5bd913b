#include <CLI11.hpp>
#include <chrono>
#include <iostream>

#include "maskpinn/cli/checks.hpp"
#include "maskpinn/cli/commands.hpp"
#include "maskpinn/cli/config.hpp"

namespace cli = maskpinn::cli;

namespace {

int config_failure(const cli::ConfigError& e) {
  std::cerr << "config error: " << e.what() << '\n';
  return cli::kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed network experiments with masked activations"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  auto* run = app.add_subcommand("run", "train every trial of a config");
  run->add_option("--config", config, "TOML config")->required();
  run->add_option("--out", out, "output directory")->required();

  std::string widths;
  auto* sweep = app.add_subcommand("sweep-width", "train a config at several widths");
  sweep->add_option("--config", config, "TOML config")->required();
  sweep->add_option("--widths", widths, "comma-separated widths, e.g. 16,64,256")->required();
  sweep->add_option("--out", out, "output directory")->required();

  std::string filter;
  bool list = false;
  auto* check = app.add_subcommand("check", "run the oracle suite");
  check->add_option("--filter", filter, "only checks whose name contains this text");
  check->add_flag("--list", list, "print check names and exit");

  std::string in;
  auto* plot = app.add_subcommand("plot", "render SVG charts from run outputs");
  plot->add_option("--in", in, "directory holding metrics.csv, preact.csv or sweep.csv")->required();
  plot->add_option("--out", out, "directory for the SVG files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigError;
  }

  try {
    if (*run) {
      const auto cfg = cli::load_config(config);
      const auto report = cli::run_experiment(cfg, config, out, std::cout);
      std::cout << "wrote " << report.dir.string() << '\n';
      return report.exit_code;
    }
    if (*sweep) {
      const auto cfg = cli::load_config(config);
      const auto list_of_widths = cli::parse_width_list(widths);
      const auto report = cli::sweep_experiment(cfg, config, list_of_widths, out, std::cout);
      std::cout << "wrote " << report.dir.string() << '\n';
      return report.exit_code;
    }
    if (*check) {
      if (list) {
        for (const auto& n : cli::check_names()) std::cout << n << '\n';
        return cli::kOk;
      }
      const auto start = std::chrono::steady_clock::now();
      std::vector<cli::CheckResult> results;
      try {
        results = cli::run_checks(filter);
      } catch (const std::invalid_argument& e) {
        std::cerr << "check: " << e.what() << '\n';
        return cli::kConfigError;
      }
      const int code = cli::report_checks(results, std::cout);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cout << (code == 0 ? "all checks passed" : "some checks FAILED") << " in " << secs << " s\n";
      return code;
    }
    if (*plot) {
      for (const auto& p : cli::plot_directory(in, out)) std::cout << "wrote " << p.string() << '\n';
      return cli::kOk;
    }
  } catch (const cli::ConfigError& e) {
    return config_failure(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kConfigError;
  }
  return cli::kOk;
}
