#include "riesz/cli.hpp"

#include "riesz/mc_oracle.hpp"
#include "riesz/potential_ops.hpp"
#include "riesz/thinness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

namespace riesz {

namespace {

using nlohmann::json;

constexpr double kInvariantTol = 1e-9;

const std::string kShapePrefix = "shape.";

// ---------------------------------------------------------------------------
// Shapes

struct ShapeParser {
  const ConfigFile& file;
  std::map<std::string, ShapeSpec> done;
  std::set<std::string> active;

  ShapeSpec resolve(const std::string& name, const std::string& from_section, const std::string& from_key) {
    if (auto it = done.find(name); it != done.end()) return it->second;
    const std::string section = kShapePrefix + name;
    if (!std::count(file.sections().begin(), file.sections().end(), section)) {
      file.fail(from_section, from_key, "unknown shape '" + name + "'");
    }
    if (active.count(name)) file.fail(section, "", "shape '" + name + "' refers to itself");
    active.insert(name);
    ShapeSpec shape = build(section);
    active.erase(name);
    try {
      validate(shape);
    } catch (const ParameterError& e) {
      file.fail(section, "type", e.what());
    }
    done[name] = shape;
    return shape;
  }

  ShapeSpec build(const std::string& section) {
    const std::string type = file.get_string(section, "type");
    if (type == "ball") return Ball{file.get_point(section, "center"), file.get_double(section, "radius")};
    if (type == "sphere") {
      return Sphere{file.get_point(section, "center"), file.get_double(section, "radius")};
    }
    if (type == "box") return Box{file.get_point(section, "lo"), file.get_point(section, "hi")};
    if (type == "rotation") {
      RotationBody body;
      body.family = static_cast<int>(file.get_int(section, "family"));
      body.s = file.get_double(section, "s");
      body.x1_lo = file.get_double(section, "x1_lo");
      body.x1_hi = file.get_double(section, "x1_hi");
      return body;
    }
    if (type == "union") {
      Union u;
      for (const auto& part : file.get_list(section, "parts")) u.parts.push_back(resolve(part, section, "parts"));
      return u;
    }
    if (type == "inverted") {
      const std::string base = file.get_string(section, "base");
      return Inverted{std::make_shared<const ShapeSpec>(resolve(base, section, "base")),
                      file.get_point(section, "center")};
    }
    if (type == "points") {
      std::filesystem::path path = file.get_string(section, "file");
      if (path.is_relative()) {
        const auto dir = std::filesystem::path(file.source()).parent_path();
        if (!dir.empty() && std::filesystem::exists(dir / path)) path = dir / path;
      }
      try {
        return load_point_cloud_csv(path.string());
      } catch (const ConfigError& e) {
        file.fail(section, "file", e.what());
      }
    }
    file.fail(section, "type", "unknown shape type '" + type + "'");
  }
};

// ---------------------------------------------------------------------------
// Run helpers

struct Context {
  const ExperimentConfig& config;
  Report& report;

  const ConfigFile& file() const { return config.file; }

  void check(const std::string& name, bool passed, double value, double tolerance) {
    report.checks.push_back({name, passed, value, tolerance});
  }

  std::string shape_name(const std::string& key = "target") const {
    if (file().has("run", key)) {
      const std::string name = file().get_string("run", key);
      if (!config.shapes.count(name)) file().fail("run", key, "unknown shape '" + name + "'");
      return name;
    }
    if (key == "target" && config.shapes.size() == 1) return config.shapes.begin()->first;
    file().fail("run", key, "missing required key");
  }

  const ShapeSpec& shape(const std::string& key = "target") const { return config.shapes.at(shape_name(key)); }

  Point point(const std::string& key, const Point& fallback) const {
    Point p = file().has("run", key) ? file().get_point("run", key) : fallback;
    if (p.size() != config.kernel.n) file().fail("run", key, "point dimension differs from kernel dim");
    return p;
  }

  Point point(const std::string& key) const {
    if (!file().has("run", key)) file().fail("run", key, "missing required key");
    return point(key, Point());
  }

  double number(const std::string& key, double fallback) const {
    return file().get_double("run", key, fallback);
  }

  long long integer(const std::string& key, long long fallback) const {
    return file().get_int("run", key, fallback);
  }

  DiscreteMeasure source() const {
    if (file().has("run", "source")) {
      std::filesystem::path path = file().get_string("run", "source");
      if (path.is_relative()) {
        const auto dir = std::filesystem::path(file().source()).parent_path();
        if (!dir.empty() && std::filesystem::exists(dir / path)) path = dir / path;
      }
      DiscreteMeasure mu;
      try {
        if (path.extension() == ".json") {
          std::ifstream in(path);
          if (!in) throw ConfigError(path.string(), 0, "cannot open file");
          mu = measure_from_json(json::parse(in));
        } else {
          mu = load_measure_csv(path.string());
        }
      } catch (const json::exception& e) {
        file().fail("run", "source", e.what());
      } catch (const ParameterError& e) {
        file().fail("run", "source", e.what());
      }
      if (mu.dim() != config.kernel.n) file().fail("run", "source", "measure dimension differs from kernel dim");
      return mu;
    }
    return DiscreteMeasure::dirac(point("y"));
  }

  void sweep_checks(const std::string& prefix, const BalayageResult& b) {
    const double bound = b.source_mass * (1.0 + kInvariantTol);
    check(prefix + "mass_bound", b.swept_mass <= bound, b.swept_mass - b.source_mass, kInvariantTol);
    check(prefix + "contraction", b.contraction_margin >= -kInvariantTol, b.contraction_margin, kInvariantTol);
    check(prefix + "kkt_stationarity", b.kkt.stationarity <= b.kkt.tolerance, b.kkt.stationarity,
          b.kkt.tolerance);
    check(prefix + "kkt_dual_feasibility", b.kkt.dual >= -b.kkt.tolerance, b.kkt.dual, b.kkt.tolerance);
  }

  void equilibrium_checks(const std::string& prefix, const EquilibriumResult& eq) {
    const double gap = std::abs(eq.capacity_mass - eq.capacity_energy);
    const double tol = 1e-6 * std::max(eq.capacity_mass, 1e-300);
    check(prefix + "mass_energy", gap <= tol, gap, tol);
    check(prefix + "kkt_stationarity", eq.kkt.stationarity <= eq.kkt.tolerance, eq.kkt.stationarity,
          eq.kkt.tolerance);
    check(prefix + "kkt_dual_feasibility", eq.kkt.dual >= -eq.kkt.tolerance, eq.kkt.dual, eq.kkt.tolerance);
  }

  void side_file(const std::string& suffix, const std::string& content) {
    report.side_files[suffix] = content;
  }
};

json kkt_json(const KktSummary& k) {
  return {{"stationarity", k.stationarity},
          {"dual", k.dual},
          {"tolerance", k.tolerance},
          {"iterations", k.iterations},
          {"objective", k.objective},
          {"support", k.support},
          {"rejected", k.rejected.size()}};
}

json sweep_json(const BalayageResult& b) {
  Point barycenter = Point::Zero(b.swept.dim());
  if (b.swept_mass > 0.0) barycenter = b.swept.points * b.swept.weights / b.swept_mass;
  return {{"source_mass", b.source_mass},
          {"swept_mass", b.swept_mass},
          {"potential_gap_on_A", b.potential_gap_on_A},
          {"contraction_margin", b.contraction_margin},
          {"barycenter", to_json(barycenter)},
          {"kkt", kkt_json(b.kkt)}};
}

std::string csv_of(const DiscreteMeasure& mu) {
  std::ostringstream out;
  write_measure_csv(out, mu);
  return out.str();
}

BalayageOptions sweep_options(const Context& ctx) {
  BalayageOptions options;
  options.tol = ctx.config.tol;
  options.probe_count = static_cast<int>(ctx.integer("probes", 1000));
  options.seed = ctx.config.seed;
  return options;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_capacity(Context& ctx) {
  const Discretization disc = discretize(ctx.shape(), ctx.config.resolution);
  const EquilibriumResult eq = equilibrium(ctx.config.kernel, disc, ctx.config.tol);
  ctx.report.results = {{"capacity", eq.capacity_mass},
                        {"energy", eq.capacity_energy},
                        {"nodes", disc.size()},
                        {"kkt", kkt_json(eq.kkt)}};
  ctx.equilibrium_checks("", eq);
  ctx.side_file("equilibrium.csv", csv_of(eq.measure));
}

void cmd_balayage(Context& ctx) {
  const Discretization disc = discretize(ctx.shape(), ctx.config.resolution);
  const DiscreteMeasure mu = ctx.source();
  const BalayageResult b = balayage(ctx.config.kernel, mu, disc, sweep_options(ctx));
  ctx.report.results = sweep_json(b);
  ctx.report.results["nodes"] = disc.size();
  ctx.sweep_checks("", b);
  ctx.side_file("swept.csv", csv_of(b.swept));
}

void cmd_harmonic_mass(Context& ctx) {
  const Discretization disc = discretize(ctx.shape(), ctx.config.resolution);
  const Point y = ctx.point("y");
  const HarmonicMassIdentity id = harmonic_mass_identity(ctx.config.kernel, y, disc, sweep_options(ctx));
  ctx.report.results = {{"y", to_json(y)},
                        {"mass", id.mass},
                        {"eq_potential_at_y", id.eq_potential_at_y},
                        {"gap", id.gap},
                        {"capacity", id.equilibrium.capacity_mass},
                        {"harmonic", sweep_json(id.harmonic)},
                        {"nodes", disc.size()}};
  const double tol = ctx.number("identity_tolerance", 1e-6);
  ctx.check("total_mass_identity", id.gap < tol, id.gap, tol);
  ctx.check("unit_mass_bound", id.mass <= 1.0 + kInvariantTol, id.mass - 1.0, kInvariantTol);
  ctx.sweep_checks("", id.harmonic);
  ctx.equilibrium_checks("equilibrium_", id.equilibrium);
}

void thinness_checks(Context& ctx, const std::string& prefix, const ThinnessReport& r) {
  bool monotone = true;
  for (std::size_t i = 1; i < r.partial_sums.size(); ++i) {
    monotone = monotone && r.partial_sums[i] >= r.partial_sums[i - 1];
  }
  ctx.check(prefix + "partial_sums_nondecreasing", monotone, r.partial_sums.back(), 0.0);
  const bool implication = r.verdict != ThinnessVerdict::ultrathin || r.thin_criterion;
  ctx.check(prefix + "ultrathin_implies_thin", implication, r.tail_slope, -r.delta);
}

void cmd_thinness(Context& ctx) {
  const Point y = ctx.point("y", Point::Zero(ctx.config.kernel.n));
  const double q = ctx.number("q", 2.0);
  const int k_lo = static_cast<int>(ctx.integer("k_lo", 1));
  const int k_hi = static_cast<int>(ctx.integer("k_hi", 12));
  const int res = static_cast<int>(ctx.integer("shell_resolution", 1000));
  const auto caps = shell_capacities(ctx.config.kernel, ctx.shape(), y, q, k_lo, k_hi,
                                     ShellDirection::outer, res, ctx.config.tol);
  std::optional<double> delta;
  if (ctx.file().has("run", "delta")) delta = ctx.number("delta", 0.0);
  const ThinnessReport r = classify_thinness(caps, ctx.config.kernel, q, delta);
  ctx.report.results = to_json(r);
  thinness_checks(ctx, "", r);
  std::ostringstream csv;
  write_thinness_csv(csv, r);
  ctx.side_file("shells.csv", csv.str());
}

void cmd_wiener(Context& ctx) {
  const Point y = ctx.point("y");
  const double q = ctx.number("q", 0.5);
  const int k_lo = static_cast<int>(ctx.integer("k_lo", 1));
  const int k_hi = static_cast<int>(ctx.integer("k_hi", 12));
  const int res = static_cast<int>(ctx.integer("shell_resolution", 1000));
  std::optional<double> delta;
  if (ctx.file().has("run", "delta")) delta = ctx.number("delta", 0.0);
  const RegularityVerdict v =
      wiener_regularity(ctx.config.kernel, ctx.shape(), y, q, k_lo, k_hi, res, delta, ctx.config.tol);
  ctx.report.results = to_json(v);
  double min_term = 0.0;
  if (!v.series_terms.empty()) min_term = *std::min_element(v.series_terms.begin(), v.series_terms.end());
  ctx.check("terms_nonnegative", min_term >= 0.0, min_term, 0.0);
  ctx.check("partial_sum_finite", std::isfinite(v.partial_sum), v.partial_sum, 0.0);
}

void cmd_kelvin_check(Context& ctx) {
  InversionOptions options;
  options.q = ctx.number("q", 2.0);
  options.k_lo = static_cast<int>(ctx.integer("k_lo", 1));
  options.k_hi = static_cast<int>(ctx.integer("k_hi", 12));
  options.resolution = static_cast<int>(ctx.integer("shell_resolution", 1000));
  options.kelvin_resolution = static_cast<int>(ctx.integer("kelvin_resolution", 600));
  options.tol = ctx.config.tol;
  if (ctx.file().has("run", "delta")) options.delta = ctx.number("delta", 0.0);
  const Point y = ctx.point("y", Point::Zero(ctx.config.kernel.n));
  const InversionComparison c = thinness_via_inversion(ctx.config.kernel, ctx.shape(), y, options);
  json transfer = json::array();
  for (const auto& t : c.transfer) {
    transfer.push_back({{"k", t.k},
                        {"capacity", t.capacity},
                        {"inverted_capacity", t.inverted_capacity},
                        {"lower", t.lower},
                        {"upper", t.upper},
                        {"holds", t.holds}});
  }
  ctx.report.results = {{"direct", to_json(c.direct)},
                        {"inverted", to_json(c.inverted)},
                        {"agree", c.agree},
                        {"inconclusive", c.inconclusive},
                        {"transfer", transfer},
                        {"kelvin_deviation", c.kelvin_deviation},
                        {"kelvin_interior", c.kelvin_interior},
                        {"kelvin_nodes", c.kelvin_nodes}};
  ctx.check("routes_agree", c.agree, c.agree ? 1.0 : 0.0, 0.0);
  ctx.check("shell_transfer_bounds", c.transfer_holds, 0.0, options.transfer_slack);
  ctx.check("kelvin_cross_check", c.kelvin_deviation < 1e-6, c.kelvin_deviation, 1e-6);
  thinness_checks(ctx, "direct_", c.direct);
}

void cmd_support(Context& ctx) {
  const Discretization disc = discretize(ctx.shape(), ctx.config.resolution);
  const DiscreteMeasure mu = ctx.source();
  const BalayageResult b = balayage(ctx.config.kernel, mu, disc, sweep_options(ctx));
  const SupportProfile p = support_profile(ctx.config.kernel, b.swept, disc);
  ctx.report.results = sweep_json(b);
  ctx.report.results["interior_mass_fraction"] = p.interior_mass_fraction;
  ctx.report.results["boundary_mass_fraction"] = p.boundary_mass_fraction;
  ctx.report.results["empty"] = p.empty;
  ctx.report.results["nodes"] = disc.size();
  ctx.sweep_checks("", b);
  const double total = p.interior_mass_fraction + p.boundary_mass_fraction;
  ctx.check("fractions_sum_to_one", p.empty || std::abs(total - 1.0) < 1e-12, total, 1e-12);
  ctx.side_file("swept.csv", csv_of(b.swept));
}

// Node subsets within growing distance of `pole`; the last step is the whole
// node set.
std::vector<Discretization> nested_by_distance(const Discretization& disc, const Point& pole, int steps) {
  Vector dist(disc.size());
  for (Eigen::Index i = 0; i < disc.size(); ++i) dist[i] = (disc.nodes.col(i) - pole).norm();
  const double far = dist.maxCoeff();
  std::vector<Discretization> nested;
  for (int k = 1; k <= steps; ++k) {
    const double radius = far * k / steps;
    std::vector<bool> mask(disc.size());
    for (Eigen::Index i = 0; i < disc.size(); ++i) mask[i] = k == steps || dist[i] <= radius;
    nested.push_back(restrict_nodes(disc, mask));
  }
  return nested;
}

void cmd_exhaust(Context& ctx) {
  const Discretization disc = discretize(ctx.shape(), ctx.config.resolution);
  Eigen::Index top = 0;
  disc.nodes.row(0).maxCoeff(&top);
  const Point pole = ctx.point("pole", disc.nodes.col(top));
  const int steps = static_cast<int>(ctx.integer("steps", 8));
  if (steps < 2) ctx.file().fail("run", "steps", "need at least 2 steps");
  const auto nested = nested_by_distance(disc, pole, steps);
  std::optional<DiscreteMeasure> source;
  if (ctx.file().has("run", "y") || ctx.file().has("run", "source")) source = ctx.source();
  const PointMatrix probes = probe_points(disc, static_cast<int>(ctx.integer("probes", 100)), ctx.config.seed,
                                          source ? &*source : nullptr);
  const ExhaustionTable table = exhaustion_run(ctx.config.kernel, nested, source, probes, ctx.config.tol);
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"step", r.step},
                    {"nodes", r.nodes},
                    {"mass", r.mass},
                    {"strong_distance", r.strong_distance},
                    {"max_potential_gap", r.max_potential_gap},
                    {"potential_increment", std::isfinite(r.potential_increment) ? json(r.potential_increment)
                                                                                 : json(nullptr)}});
  }
  ctx.report.results = {{"rows", rows}, {"probes", probes.cols()}, {"mode", source ? "balayage" : "equilibrium"}};
  ctx.check("masses_nondecreasing", table.masses_nondecreasing, table.rows.back().mass, 0.0);
  double min_increment = std::numeric_limits<double>::infinity();
  for (const auto& r : table.rows) min_increment = std::min(min_increment, r.potential_increment);
  ctx.check("potentials_nondecreasing", table.potentials_nondecreasing,
            std::isfinite(min_increment) ? min_increment : 0.0, kInvariantTol);
  ctx.check("final_strong_distance", table.rows.back().strong_distance < 1e-3,
            table.rows.back().strong_distance, 1e-3);
  if (source) {
    for (const auto& r : table.rows) {
      ctx.check("mass_bound_step_" + std::to_string(r.step),
                r.mass <= source->total_mass() * (1.0 + kInvariantTol), r.mass, kInvariantTol);
    }
  }
}

void cmd_continuity(Context& ctx) {
  const Discretization disc = discretize(ctx.shape(), ctx.config.resolution);
  const Point wanted = ctx.point("z", Point::Unit(ctx.config.kernel.n, 0));
  Eigen::Index nearest = 0;
  (disc.nodes.colwise() - wanted).colwise().norm().minCoeff(&nearest);
  const Point z = disc.nodes.col(nearest);
  const BoundingBox box = bounding_box(ctx.shape());
  const Point center = ctx.point("center", 0.5 * (box.lo + box.hi));
  const int steps = static_cast<int>(ctx.integer("approach_steps", 8));
  if (steps < 1) ctx.file().fail("run", "approach_steps", "need at least one step");
  std::vector<Point> approach;
  for (int m = 1; m <= steps; ++m) approach.push_back(z + std::ldexp(1.0, -m) * (z - center));
  const Bump f{z, ctx.number("rho", 0.5)};
  const ContinuityTable t = continuity_experiment(ctx.config.kernel, disc, z, approach, f, ctx.config.tol);
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"y", to_json(r.y)}, {"distance", r.distance}, {"value", r.value}, {"gap", r.gap},
                    {"mass", r.mass}});
  }
  ctx.report.results = {{"z", to_json(z)}, {"f_at_z", t.f_at_z}, {"rows", rows}, {"nodes", disc.size()}};
  const double tol = ctx.number("gap_tolerance", 0.02);
  ctx.check("gaps_nonincreasing", t.gaps_nonincreasing, t.final_gap, 0.0);
  ctx.check("final_gap", t.final_gap < tol, t.final_gap, tol);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    ctx.check("mass_bound_step_" + std::to_string(i + 1), t.rows[i].mass <= 1.0 + kInvariantTol,
              t.rows[i].mass - 1.0, kInvariantTol);
  }
}

void cmd_subadd(Context& ctx) {
  const Discretization a = discretize(ctx.shape("a"), ctx.config.resolution);
  const Discretization b = ctx.file().has("run", "b") ? discretize(ctx.shape("b"), ctx.config.resolution)
                                                      : empty_discretization(ctx.config.kernel.n);
  const SubadditivityGap g = subadditivity_gap(ctx.config.kernel, a, b, ctx.config.tol);
  ctx.report.results = {{"capacity_a", g.capacity_a},
                        {"capacity_b", g.capacity_b},
                        {"capacity_union", g.capacity_union},
                        {"distance", std::isfinite(g.distance) ? json(g.distance) : json(nullptr)},
                        {"lhs", g.lhs},
                        {"rhs", g.rhs},
                        {"margin", g.margin}};
  ctx.check("strengthened_subadditivity", g.margin >= -kInvariantTol, g.margin, kInvariantTol);
  ctx.check("subadditivity", g.plain_margin >= -kInvariantTol, g.plain_margin, kInvariantTol);
}

void cmd_example_ex(Context& ctx) {
  struct Body {
    std::string name;
    int family;
    double s;
    ThinnessVerdict expected;
  };
  const std::vector<Body> bodies = {{"F1_s0", 1, 0.0, ThinnessVerdict::not_thin},
                                    {"F1_s1", 1, 1.0, ThinnessVerdict::not_thin},
                                    {"F2_s0.5", 2, 0.5, ThinnessVerdict::thin_not_ultrathin},
                                    {"F2_s1", 2, 1.0, ThinnessVerdict::thin_not_ultrathin},
                                    {"F3_s2", 3, 2.0, ThinnessVerdict::ultrathin}};
  const double q = ctx.number("q", 2.0);
  const int k_lo = static_cast<int>(ctx.integer("k_lo", 1));
  const int k_hi = static_cast<int>(ctx.integer("k_hi", 12));
  const int res = static_cast<int>(ctx.integer("shell_resolution", 1000));
  const Point y = Point::Zero(3);
  if (ctx.config.kernel.n != 3) throw ParameterError("example-ex runs in R^3");
  json verdicts = json::object();
  json details = json::object();
  std::ostringstream csv;
  for (const auto& body : bodies) {
    const ShapeSpec shape = rotation_body(body.family, body.s, 1.0, std::pow(q, k_hi + 1));
    const auto caps =
        shell_capacities(ctx.config.kernel, shape, y, q, k_lo, k_hi, ShellDirection::outer, res, ctx.config.tol);
    const ThinnessReport r = classify_thinness(caps, ctx.config.kernel, q);
    verdicts[body.name] = to_string(r.verdict);
    details[body.name] = to_json(r);
    ctx.check(body.name + "_verdict", r.verdict == body.expected, r.tail_slope, -r.delta);
    thinness_checks(ctx, body.name + "_", r);
    csv << "# " << body.name << '\n';
    write_thinness_csv(csv, r);
  }
  ctx.report.results = {{"verdicts", verdicts}, {"reports", details}};
  ctx.side_file("shells.csv", csv.str());
}

void cmd_mc_hit(Context& ctx) {
  WalkOptions options;
  options.epsilon = ctx.number("epsilon", 0.0);
  options.n_walkers = ctx.integer("walkers", 100000);
  options.seed = ctx.config.seed;
  options.record_hits = ctx.file().get_bool("run", "record_hits", false);
  const Point y = ctx.point("y");
  const HitStats stats = wos_hit(ctx.config.kernel, y, ctx.shape(), options);
  ctx.report.results = to_json(stats);
  const double expected_se =
      std::sqrt(stats.hit_probability * (1.0 - stats.hit_probability) / static_cast<double>(stats.n_walkers));
  ctx.check("probability_in_unit_interval", stats.hit_probability >= 0.0 && stats.hit_probability <= 1.0,
            stats.hit_probability, 0.0);
  ctx.check("std_error_formula", std::abs(stats.std_error - expected_se) <= 1e-15, stats.std_error, 1e-15);
  if (ctx.file().get_bool("run", "compare_sweep", false)) {
    const Discretization disc = discretize(ctx.shape(), ctx.config.resolution);
    const BalayageResult b = harmonic_measure(ctx.config.kernel, y, disc, sweep_options(ctx));
    const double allowance = 3.0 * stats.std_error + 0.005;
    const double diff = std::abs(stats.hit_probability - b.swept_mass);
    ctx.report.results["swept_mass"] = b.swept_mass;
    ctx.check("agrees_with_sweep", diff <= allowance, diff, allowance);
    ctx.sweep_checks("sweep_", b);
  }
  if (options.record_hits) {
    std::ostringstream csv;
    write_points_csv(csv, stats.hit_points);
    ctx.side_file("hits.csv", csv.str());
  }
}

const std::map<std::string, std::function<void(Context&)>>& commands() {
  static const std::map<std::string, std::function<void(Context&)>> table = {
      {"capacity", cmd_capacity},   {"balayage", cmd_balayage},   {"harmonic-mass", cmd_harmonic_mass},
      {"thinness", cmd_thinness},   {"wiener", cmd_wiener},       {"kelvin-check", cmd_kelvin_check},
      {"support", cmd_support},     {"exhaust", cmd_exhaust},     {"continuity", cmd_continuity},
      {"subadd", cmd_subadd},       {"example-ex", cmd_example_ex}, {"mc-hit", cmd_mc_hit}};
  return table;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : commands()) out.push_back(name);
    return out;
  }();
  return names;
}

ExperimentConfig parse_experiment(const ConfigFile& file) {
  ExperimentConfig config;
  config.file = file;
  config.command = file.get_string("", "command");
  if (!commands().count(config.command)) file.fail("", "command", "unknown command '" + config.command + "'");
  config.kernel.alpha = file.get_double("kernel", "alpha", 2.0);
  config.kernel.n = static_cast<int>(file.get_int("kernel", "dim", 3));
  try {
    config.kernel.validate();
  } catch (const ParameterError& e) {
    const bool bad_dim = config.kernel.n < 3 && file.has("kernel", "dim");
    file.fail("kernel", bad_dim ? "dim" : (file.has("kernel", "alpha") ? "alpha" : ""), e.what());
  }
  const long long resolution = file.get_int("", "resolution", 500);
  if (resolution < 1) file.fail("", "resolution", "must be positive");
  config.resolution = static_cast<int>(resolution);
  config.tol = file.get_double("", "tol", 1e-9);
  if (!(config.tol > 0.0)) file.fail("", "tol", "must be positive");
  const long long seed = file.get_int("", "seed", 0);
  if (seed < 0) file.fail("", "seed", "must be nonnegative");
  config.seed = static_cast<std::uint64_t>(seed);
  config.output_path = file.get_string("", "output", "");

  ShapeParser parser{file, {}, {}};
  for (const auto& section : file.sections()) {
    if (section.rfind(kShapePrefix, 0) != 0) continue;
    const std::string name = section.substr(kShapePrefix.size());
    if (name.empty()) file.fail(section, "", "empty shape name");
    const ShapeSpec shape = parser.resolve(name, section, "");
    if (dimension(shape) != config.kernel.n) file.fail(section, "", "shape dimension differs from kernel dim");
    config.shapes[name] = shape;
  }
  for (const auto& key : {"target", "a", "b"}) {
    if (file.has("run", key) && !config.shapes.count(file.get_string("run", key))) {
      file.fail("run", key, "unknown shape '" + file.get_string("run", key) + "'");
    }
  }
  return config;
}

void validate_experiment(const ExperimentConfig& config) {
  config.kernel.validate();
  if (config.resolution < 1) throw ParameterError("resolution must be positive");
  for (const auto& [name, shape] : config.shapes) {
    if (dimension(shape) != config.kernel.n) {
      throw ParameterError("shape '" + name + "' has dimension " + std::to_string(dimension(shape)) +
                           " but the kernel has dim " + std::to_string(config.kernel.n));
    }
  }
}

bool Report::passed() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return c.passed; });
}

nlohmann::json Report::to_json() const {
  json list = json::array();
  for (const auto& c : checks) {
    list.push_back({{"name", c.name},
                    {"passed", c.passed},
                    {"value", std::isfinite(c.value) ? json(c.value) : json(nullptr)},
                    {"tolerance", c.tolerance}});
  }
  return {{"schema", 1},
          {"command", command},
          {"inputs_digest", inputs_digest},
          {"results", results},
          {"invariant_checks", list},
          {"passed", passed()},
          {"wall_time", wall_time}};
}

std::string inputs_digest(const ExperimentConfig& config) {
  std::ostringstream canon;
  canon << std::setprecision(17) << "command=" << config.command << "\nalpha=" << config.kernel.alpha
        << "\ndim=" << config.kernel.n << "\nresolution=" << config.resolution << "\ntol=" << config.tol
        << "\nseed=" << config.seed << '\n';
  for (const auto& section : config.file.sections()) {
    for (const auto& [key, entry] : config.file.section(section)) {
      if (section.empty() && (key == "output" || key == "resolution" || key == "seed")) continue;
      if (section == "kernel") continue;
      canon << '[' << section << ']' << key << '=' << entry.value << '\n';
    }
  }
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canon.str());
  return hex.str();
}

Report run(const ExperimentConfig& config) {
  validate_experiment(config);
  const auto start = std::chrono::steady_clock::now();
  Report report;
  report.command = config.command;
  report.inputs_digest = inputs_digest(config);
  const auto it = commands().find(config.command);
  if (it == commands().end()) throw ParameterError("unknown command '" + config.command + "'");
  Context ctx{config, report};
  it->second(ctx);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

int exit_status(const Report& report) { return report.passed() ? 0 : 1; }

void write_report(const Report& report, const std::string& path) {
  namespace fs = std::filesystem;
  std::vector<std::pair<fs::path, std::string>> files;
  files.emplace_back(path, report.to_json().dump(2) + "\n");
  fs::path stem = path;
  if (stem.extension() == ".json") stem.replace_extension();
  for (const auto& [suffix, content] : report.side_files) {
    files.emplace_back(stem.string() + "." + suffix, content);
  }
  std::vector<fs::path> temps;
  try {
    for (const auto& [target, content] : files) {
      fs::path temp = target;
      temp += ".tmp";
      std::ofstream out(temp, std::ios::binary);
      temps.push_back(temp);
      out << content;
      out.close();
      if (!out) throw Error("cannot write " + temp.string());
    }
    for (std::size_t i = 0; i < files.size(); ++i) fs::rename(temps[i], files[i].first);
  } catch (...) {
    std::error_code ec;
    for (const auto& temp : temps) fs::remove(temp, ec);
    throw;
  }
}

double Bump::operator()(const Point& x) const {
  const double t = 1.0 - (x - center).squaredNorm() / (radius * radius);
  return t > 0.0 ? t * t * t : 0.0;
}

ContinuityTable continuity_experiment(const KernelParams& params, const Discretization& disc,
                                      const Point& z, const std::vector<Point>& approach,
                                      const Bump& f, double tol) {
  if (disc.empty()) throw ParameterError("continuity experiment on an empty discretization");
  if (!(f.radius > 0.0)) throw ParameterError("bump radius must be positive");
  Eigen::Index node = -1;
  for (Eigen::Index i = 0; i < disc.size() && node < 0; ++i) {
    if ((disc.nodes.col(i) - z).norm() < 1e-12) node = i;
  }
  if (node < 0) throw ParameterError("continuity experiment: z is not a node");
  if (approach.empty()) throw ParameterError("continuity experiment: no approach points");
  double previous = std::numeric_limits<double>::infinity();
  for (const auto& y : approach) {
    const double d = (y - z).norm();
    if (!(d < previous)) throw ParameterError("continuity experiment: approach points do not converge to z");
    previous = d;
  }
  if (approach.size() > 1 && !((approach.back() - z).norm() <= 0.5 * (approach.front() - z).norm())) {
    throw ParameterError("continuity experiment: approach points do not converge to z");
  }
  ContinuityTable table;
  table.z = z;
  table.f_at_z = f(z);
  Vector f_nodes(disc.size());
  for (Eigen::Index i = 0; i < disc.size(); ++i) f_nodes[i] = f(disc.nodes.col(i));
  const Matrix gram = kernel_matrix(params, disc);
  BalayageOptions options;
  options.tol = tol;
  options.probes = PointMatrix(disc.dim(), 0);
  for (const auto& y : approach) {
    const BalayageResult b = balayage(params, DiscreteMeasure::dirac(y), disc, gram, options);
    ContinuityRow row;
    row.y = y;
    row.distance = (y - z).norm();
    row.value = f_nodes.dot(b.swept.weights);
    row.gap = std::abs(row.value - table.f_at_z);
    row.mass = b.swept_mass;
    if (!table.rows.empty() && row.gap > table.rows.back().gap) table.gaps_nonincreasing = false;
    table.rows.push_back(row);
  }
  table.final_gap = table.rows.back().gap;
  return table;
}

}  // namespace riesz
