// Command-line front end: runs one experiment from a config file and writes
// a JSON report. Exit status: 0 all checks passed, 1 a check failed,
// 2 bad configuration or arguments, 3 the computation raised an error.

#include "riesz/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for Riesz potentials, balayage and thinness"};
  std::string config_path;
  std::string output_path;
  std::optional<long long> seed;
  std::optional<int> resolution;
  std::optional<double> alpha;
  std::optional<int> dim;
  bool quiet = false;
  app.add_option("--config", config_path, "Experiment config (key = value with [section] headers)")
      ->required();
  app.add_option("--output", output_path, "JSON report path (overrides the config's output key)");
  app.add_option("--seed", seed, "Seed for probes and random walks");
  app.add_option("--resolution", resolution, "Target node count");
  app.add_option("--alpha", alpha, "Kernel exponent alpha in (0, 2]");
  app.add_option("--dim", dim, "Ambient dimension n >= 3");
  app.add_flag("--quiet", quiet, "Do not print the report");
  CLI11_PARSE(app, argc, argv);

  riesz::ExperimentConfig config;
  try {
    config = riesz::parse_experiment(riesz::ConfigFile::load(config_path));
    if (seed) {
      if (*seed < 0) throw riesz::ParameterError("--seed must be nonnegative");
      config.seed = static_cast<std::uint64_t>(*seed);
    }
    if (resolution) config.resolution = *resolution;
    if (alpha) config.kernel.alpha = *alpha;
    if (dim) config.kernel.n = *dim;
    if (!output_path.empty()) config.output_path = output_path;
    riesz::validate_experiment(config);
  } catch (const riesz::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  riesz::Report report;
  try {
    report = riesz::run(config);
  } catch (const std::exception& e) {
    const nlohmann::json error = {{"schema", 1},
                                  {"command", config.command},
                                  {"error", {{"type", dynamic_cast<const riesz::ParameterError*>(&e)
                                                          ? "parameter"
                                                          : "computation"},
                                             {"message", e.what()}}}};
    std::cerr << error.dump(2) << '\n';
    return 3;
  }

  try {
    if (!config.output_path.empty()) riesz::write_report(report, config.output_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  if (!quiet) std::cout << report.to_json().dump(2) << '\n';
  return riesz::exit_status(report);
}
