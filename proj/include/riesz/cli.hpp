#pragma once

#include "riesz/geometry.hpp"
#include "riesz/io.hpp"
#include "riesz/kernel.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace riesz {

struct ExperimentConfig {
  std::string command;
  KernelParams kernel;
  std::map<std::string, ShapeSpec> shapes;
  int resolution = 500;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  std::string output_path;
  // Command-specific keys of the [run] section.
  ConfigFile file;
};

// Commands understood by run().
const std::vector<std::string>& command_names();

// Builds an experiment from a parsed config. Throws ConfigError with line
// numbers on unknown commands, bad values and unresolved shape names.
ExperimentConfig parse_experiment(const ConfigFile& file);

// Re-checks kernel ranges and shape dimensions after command-line overrides.
void validate_experiment(const ExperimentConfig& config);

struct InvariantCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
};

struct Report {
  std::string command;
  std::string inputs_digest;
  nlohmann::json results;
  std::vector<InvariantCheck> checks;
  double wall_time = 0.0;
  // Side files by suffix, e.g. "swept.csv".
  std::map<std::string, std::string> side_files;

  bool passed() const;
  nlohmann::json to_json() const;
};

// Hex digest of everything that determines a run's results.
std::string inputs_digest(const ExperimentConfig& config);

Report run(const ExperimentConfig& config);

// 0 when every invariant check passed, 1 otherwise.
int exit_status(const Report& report);

// Writes the JSON report to `path` and side files next to it
// (<path without .json>.<suffix>). Files are written to temporaries first and
// renamed, so a failure leaves no partial output.
void write_report(const Report& report, const std::string& path);

// f(x) = max(0, 1 - |x - center|^2 / radius^2)^3
struct Bump {
  Point center;
  double radius = 0.5;
  double operator()(const Point& x) const;
};

struct ContinuityRow {
  Point y;
  double distance = 0.0;  // |y - z|
  double value = 0.0;     // eps_y^A(f)
  double gap = 0.0;       // |value - f(z)|
  double mass = 0.0;
};

struct ContinuityTable {
  Point z;
  double f_at_z = 0.0;
  std::vector<ContinuityRow> rows;
  bool gaps_nonincreasing = true;
  double final_gap = 0.0;
};

// Values of the swept Dirac at each approach point against f. Throws
// ParameterError when z is not a node or the approach points do not move
// monotonically toward z.
ContinuityTable continuity_experiment(const KernelParams& params, const Discretization& disc,
                                      const Point& z, const std::vector<Point>& approach,
                                      const Bump& f, double tol = 1e-9);

}  // namespace riesz
