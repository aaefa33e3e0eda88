#include "riesz/cli.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace riesz;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::string pattern = (fs::temp_directory_path() / "riesz_cli_XXXXXX").string();
    if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
  std::size_t file_count() const {
    return static_cast<std::size_t>(std::distance(fs::directory_iterator(path), fs::directory_iterator()));
  }
};

ConfigFile parse(const std::string& text) {
  std::istringstream in(text);
  return ConfigFile::parse(in, "test.cfg");
}

ExperimentConfig experiment(const std::string& text) { return parse_experiment(parse(text)); }

int config_error_line(const std::string& text) {
  try {
    experiment(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

int run_binary(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(RIESZ_LAB_BINARY) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::string kSphere =
    "[kernel]\nalpha = 2\ndim = 3\n"
    "[shape.sphere]\ntype = sphere\ncenter = 0,0,0\nradius = 1\n";

}  // namespace

TEST_CASE("parsing experiments") {
  const ExperimentConfig c = experiment("command = capacity\nresolution = 300\nseed = 4\n" + kSphere);
  CHECK(c.command == "capacity");
  CHECK(c.resolution == 300);
  CHECK(c.seed == 4);
  CHECK(c.kernel.alpha == 2.0);
  REQUIRE(c.shapes.count("sphere") == 1);
  CHECK(std::holds_alternative<Sphere>(c.shapes.at("sphere").shape));

  const ExperimentConfig u = experiment(
      "command = capacity\n"
      "[shape.a]\ntype = ball\ncenter = 0,0,0\nradius = 1\n"
      "[shape.b]\ntype = ball\ncenter = 5,0,0\nradius = 1\n"
      "[shape.both]\ntype = union\nparts = a, b\n"
      "[shape.image]\ntype = inverted\nbase = both\ncenter = 2,0,0\n"
      "[run]\ntarget = both\n");
  CHECK(std::get<Union>(u.shapes.at("both").shape).parts.size() == 2);
  CHECK(std::holds_alternative<Inverted>(u.shapes.at("image").shape));
  CHECK(command_names().size() == 12);
}

TEST_CASE("configuration errors point at the offending line") {
  CHECK(config_error_line("command = nonsense\n") == 1);
  CHECK(config_error_line("resolution = 10\n") == 0);
  CHECK(config_error_line("command = capacity\n[kernel]\nalpha = 2.5\n") == 3);
  CHECK(config_error_line("command = capacity\n[kernel]\nalpha = 1\ndim = 2\n") == 4);
  CHECK(config_error_line("command = capacity\nresolution = 0\n") == 2);
  CHECK(config_error_line("command = capacity\nseed = -1\n") == 2);
  CHECK(config_error_line("command = capacity\n[shape.s]\ntype = cone\n") == 3);
  CHECK(config_error_line("command = capacity\n[shape.s]\ntype = ball\ncenter = 0,0,0\n") == 2);
  CHECK(config_error_line("command = capacity\n[shape.s]\ntype = ball\ncenter = 0,0\nradius = 1\n") == 3);
  CHECK(config_error_line("command = capacity\n[shape.u]\ntype = union\nparts = u\n") == 2);
  CHECK(config_error_line("command = capacity\n[shape.u]\ntype = union\nparts = v\n") == 4);
  CHECK(config_error_line("command = capacity\n" + kSphere + "[run]\ntarget = nothing\n") == 10);
  CHECK(config_error_line("command = capacity\n[shape.s]\ntype = ball\ncenter = 0,0,0\nradius = -1\n") == 3);
}

TEST_CASE("running commands in process") {
  SUBCASE("capacity of the unit sphere") {
    const Report r = run(experiment("command = capacity\nresolution = 300\n" + kSphere));
    CHECK(r.results["capacity"].get<double>() == doctest::Approx(1.0).epsilon(0.02));
    CHECK(r.passed());
    CHECK(exit_status(r) == 0);
    CHECK_FALSE(r.checks.empty());
    CHECK(r.side_files.count("equilibrium.csv") == 1);
    const nlohmann::json j = r.to_json();
    CHECK(j["schema"] == 1);
    CHECK(j["command"] == "capacity");
    CHECK(j["invariant_checks"].size() == r.checks.size());
  }
  SUBCASE("harmonic mass from outside") {
    const Report r = run(experiment("command = harmonic-mass\nresolution = 300\n" + kSphere + "[run]\ny = 5,0,0\n"));
    CHECK(r.results["mass"].get<double>() == doctest::Approx(0.2).epsilon(0.02));
    CHECK(r.passed());
  }
  SUBCASE("a failed check gives status one") {
    // a continuity tolerance no discretization meets
    const Report r = run(experiment("command = continuity\nresolution = 200\n" + kSphere +
                                    "[run]\napproach_steps = 3\ngap_tolerance = 1e-12\n"));
    CHECK_FALSE(r.passed());
    CHECK(exit_status(r) == 1);
  }
  SUBCASE("bad run keys surface as errors") {
    CHECK_THROWS_AS(run(experiment("command = harmonic-mass\n" + kSphere + "[run]\ny = 5,0\n")), ConfigError);
    CHECK_THROWS_AS(run(experiment("command = harmonic-mass\n" + kSphere)), ConfigError);
  }
  SUBCASE("command-line overrides are rechecked") {
    ExperimentConfig c = experiment("command = capacity\n" + kSphere);
    c.kernel.n = 4;
    CHECK_THROWS_AS(validate_experiment(c), ParameterError);
    c.kernel.n = 3;
    c.kernel.alpha = 0.0;
    CHECK_THROWS_AS(run(c), ParameterError);
  }
}

TEST_CASE("reports are reproducible") {
  const std::string text = "command = mc-hit\nseed = 9\n" + kSphere + "[run]\ny = 3,0,0\nwalkers = 2000\n";
  const ExperimentConfig a = experiment(text);
  const ExperimentConfig b = experiment("output = elsewhere.json\n" + text);
  CHECK(inputs_digest(a) == inputs_digest(b));
  CHECK(inputs_digest(a) != inputs_digest(experiment(text + "epsilon = 1e-3\n")));
  ExperimentConfig reseeded = a;
  reseeded.seed = 10;
  CHECK(inputs_digest(a) != inputs_digest(reseeded));
  const Report r1 = run(a);
  const Report r2 = run(b);
  CHECK(r1.results == r2.results);
  CHECK(r1.inputs_digest == r2.inputs_digest);
}

TEST_CASE("report files") {
  TempDir dir;
  Report r;
  r.command = "capacity";
  r.checks.push_back({"dummy", true, 0.0, 0.0});
  r.results = {{"x", 1}};
  r.side_files["extra.csv"] = "a,b\n1,2\n";
  const fs::path out = dir.path / "run.json";
  write_report(r, out.string());
  CHECK(nlohmann::json::parse(slurp(out))["results"]["x"] == 1);
  CHECK(slurp(dir.path / "run.extra.csv") == "a,b\n1,2\n");
  CHECK(dir.file_count() == 2);
  CHECK_THROWS(write_report(r, (dir.path / "missing" / "run.json").string()));
  CHECK(dir.file_count() == 2);
  Report empty;
  CHECK_FALSE(empty.passed());
}

TEST_CASE("bump function") {
  const Bump f{Point::Zero(3), 0.5};
  CHECK(f(Point::Zero(3)) == 1.0);
  CHECK(f(Point::Unit(3, 0) * 0.25) == doctest::Approx(0.421875));
  CHECK(f(Point::Unit(3, 1) * 0.5) == 0.0);
  CHECK(f(Point::Unit(3, 2)) == 0.0);
}

TEST_CASE("continuity experiment") {
  const KernelParams params{2.0, 3};
  const Discretization disc = discretize(Sphere{Point::Zero(3), 1.0}, 400);
  Eigen::Index top = 0;
  disc.nodes.row(0).maxCoeff(&top);
  const Point z = disc.nodes.col(top);
  SUBCASE("a Dirac at z reproduces f(z)") {
    const auto t = continuity_experiment(params, disc, z, {z}, Bump{z, 0.5});
    CHECK(t.rows[0].value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(t.final_gap < 1e-9);
  }
  SUBCASE("a bump away from the sphere sees nothing") {
    std::vector<Point> approach;
    for (int m = 1; m <= 4; ++m) approach.push_back(z * (1.0 + std::ldexp(1.0, -m)));
    const auto t = continuity_experiment(params, disc, z, approach, Bump{Point::Constant(3, 5.0), 0.5});
    for (const auto& row : t.rows) CHECK(row.value == 0.0);
  }
  SUBCASE("approach sequences that do not converge are rejected") {
    CHECK_THROWS_AS(continuity_experiment(params, disc, z, {z * 1.5, z * 2.0}, Bump{z, 0.5}), ParameterError);
    CHECK_THROWS_AS(continuity_experiment(params, disc, z, {z * 1.5, z * 1.4}, Bump{z, 0.5}), ParameterError);
    CHECK_THROWS_AS(continuity_experiment(params, disc, z, {}, Bump{z, 0.5}), ParameterError);
    CHECK_THROWS_AS(continuity_experiment(params, disc, z * 1.01, {z * 1.5}, Bump{z * 1.01, 0.5}), ParameterError);
    CHECK_THROWS_AS(continuity_experiment(params, disc, z, {z * 1.5}, Bump{z, 0.0}), ParameterError);
  }
}

TEST_CASE("shipped configs parse") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(RIESZ_LAB_CONFIGS)) {
    if (entry.path().extension() != ".cfg") continue;
    CAPTURE(entry.path().string());
    const ExperimentConfig c = parse_experiment(ConfigFile::load(entry.path().string()));
    CHECK_NOTHROW(validate_experiment(c));
    CHECK_FALSE(c.output_path.empty());
    ++count;
  }
  CHECK(count == static_cast<int>(command_names().size()));
}

TEST_CASE("command-line front end") {
  TempDir dir;
  const fs::path out = dir.path / "report.json";
  const fs::path log = dir.path / "log.txt";
  SUBCASE("a passing run writes its report") {
    const fs::path cfg = dir.write("ok.cfg", "command = capacity\nresolution = 200\n" + kSphere);
    CHECK(run_binary("--config '" + cfg.string() + "' --output '" + out.string() + "' --quiet", log) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["passed"] == true);
    CHECK(fs::exists(dir.path / "report.equilibrium.csv"));
  }
  SUBCASE("overrides from the command line") {
    const fs::path cfg = dir.write("ok.cfg", "command = capacity\nresolution = 200\n" + kSphere);
    CHECK(run_binary("--config '" + cfg.string() + "' --resolution 100 --alpha 1.5", log) == 0);
    const auto j = nlohmann::json::parse(slurp(log));
    CHECK(j["results"]["nodes"].get<int>() < 150);
    CHECK(run_binary("--config '" + cfg.string() + "' --alpha 3", log) == 2);
    CHECK(run_binary("--config '" + cfg.string() + "' --dim 4", log) == 2);
    CHECK(run_binary("--config '" + cfg.string() + "' --seed -3", log) == 2);
  }
  SUBCASE("a malformed config leaves no output") {
    const fs::path cfg = dir.write("bad.cfg", "command = capacity\n[shape.s\n");
    CHECK(run_binary("--config '" + cfg.string() + "' --output '" + out.string() + "'", log) == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK(slurp(log).find("bad.cfg:2:") != std::string::npos);
  }
  SUBCASE("missing arguments and files") {
    CHECK(run_binary("", log) != 0);
    CHECK(run_binary("--config '" + (dir.path / "absent.cfg").string() + "'", log) == 2);
  }
  SUBCASE("a module error gives a structured error and status three") {
    const fs::path cfg = dir.write("err.cfg", "command = thinness\n" + kSphere + "[run]\nk_lo = 1\nk_hi = 3\n");
    CHECK(run_binary("--config '" + cfg.string() + "' --output '" + out.string() + "'", log) == 3);
    CHECK_FALSE(fs::exists(out));
    CHECK(slurp(log).find("\"error\"") != std::string::npos);
  }
  SUBCASE("a failed check gives status one") {
    const fs::path cfg = dir.write("fail.cfg", "command = continuity\nresolution = 200\n" + kSphere +
                                                   "[run]\napproach_steps = 3\ngap_tolerance = 1e-12\n");
    CHECK(run_binary("--config '" + cfg.string() + "' --output '" + out.string() + "' --quiet", log) == 1);
    CHECK(nlohmann::json::parse(slurp(out))["passed"] == false);
  }
}
