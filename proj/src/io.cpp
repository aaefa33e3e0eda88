#include "riesz/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace riesz {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool parse_double(const std::string& text, double& value) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open file");
  return in;
}

// Rows of a numeric CSV with a header naming the coordinate columns x1..xn
// followed by `trailing`.
struct NumericTable {
  int dim = 0;
  std::vector<std::vector<double>> rows;
  std::vector<int> lines;
};

NumericTable read_table(std::istream& in, const std::string& source,
                        const std::vector<std::string>& trailing) {
  NumericTable table;
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split(t, ',');
    if (!header) {
      header = true;
      const int columns = static_cast<int>(fields.size());
      table.dim = columns - static_cast<int>(trailing.size());
      if (table.dim < 1) throw ConfigError(source, line_no, "header has too few columns");
      for (int d = 0; d < table.dim; ++d) {
        if (fields[d] != "x" + std::to_string(d + 1)) {
          throw ConfigError(source, line_no, "expected column x" + std::to_string(d + 1));
        }
      }
      for (std::size_t i = 0; i < trailing.size(); ++i) {
        if (fields[table.dim + i] != trailing[i]) {
          throw ConfigError(source, line_no, "expected column " + trailing[i]);
        }
      }
      continue;
    }
    if (fields.size() != static_cast<std::size_t>(table.dim) + trailing.size()) {
      throw ConfigError(source, line_no, "wrong number of fields");
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_double(fields[i], row[i]) || !std::isfinite(row[i])) {
        throw ConfigError(source, line_no, "not a finite number: '" + fields[i] + "'");
      }
    }
    table.rows.push_back(std::move(row));
    table.lines.push_back(line_no);
  }
  if (!header) throw ConfigError(source, line_no, "missing header");
  return table;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : ParameterError(line > 0 ? source + ":" + std::to_string(line) + ": " + message
                              : source + ": " + message),
      line_(line) {}

ConfigFile ConfigFile::parse(std::istream& in, const std::string& source) {
  ConfigFile cfg;
  cfg.source_ = source;
  cfg.data_[""];
  cfg.order_.push_back("");
  std::string current;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(source, line_no, "unterminated section header");
      current = trim(t.substr(1, t.size() - 2));
      if (current.empty()) throw ConfigError(source, line_no, "empty section name");
      if (cfg.section_lines_.count(current)) {
        throw ConfigError(source, line_no, "duplicate section [" + current + "]");
      }
      cfg.section_lines_[current] = line_no;
      cfg.data_[current];
      cfg.order_.push_back(current);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line_no, "expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line_no, "empty key");
    auto& section = cfg.data_[current];
    if (section.count(key)) throw ConfigError(source, line_no, "duplicate key '" + key + "'");
    section[key] = Entry{value, line_no};
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  auto in = open_input(path);
  return parse(in, path);
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  const auto it = data_.find(section);
  return it != data_.end() && it->second.count(key) > 0;
}

const std::map<std::string, ConfigFile::Entry>& ConfigFile::section(const std::string& name) const {
  const auto it = data_.find(name);
  if (it == data_.end()) throw ConfigError(source_, 0, "missing section [" + name + "]");
  return it->second;
}

void ConfigFile::fail(const std::string& section, const std::string& key,
                      const std::string& message) const {
  int line = 0;
  if (has(section, key)) {
    line = data_.at(section).at(key).line;
  } else if (section_lines_.count(section)) {
    line = section_lines_.at(section);
  }
  const std::string where = key.empty() ? "" : (section.empty() ? key : section + "." + key) + ": ";
  throw ConfigError(source_, line, where + message);
}

const ConfigFile::Entry& ConfigFile::entry(const std::string& section, const std::string& key) const {
  if (!has(section, key)) fail(section, key, "missing required key");
  return data_.at(section).at(key);
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key) const {
  return entry(section, key).value;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key) const {
  double value = 0.0;
  if (!parse_double(entry(section, key).value, value) || !std::isfinite(value)) {
    fail(section, key, "expected a finite number");
  }
  return value;
}

double ConfigFile::get_double(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long long ConfigFile::get_int(const std::string& section, const std::string& key) const {
  const std::string t = entry(section, key).value;
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) fail(section, key, "expected an integer");
  return value;
}

long long ConfigFile::get_int(const std::string& section, const std::string& key,
                              long long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  fail(section, key, "expected true or false");
}

Point ConfigFile::get_point(const std::string& section, const std::string& key) const {
  const auto fields = split(entry(section, key).value, ',');
  Point p(static_cast<Eigen::Index>(fields.size()));
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (!parse_double(fields[i], p[static_cast<Eigen::Index>(i)]) ||
        !std::isfinite(p[static_cast<Eigen::Index>(i)])) {
      fail(section, key, "expected a comma-separated list of finite numbers");
    }
  }
  if (p.size() == 0) fail(section, key, "empty point");
  return p;
}

std::vector<std::string> ConfigFile::get_list(const std::string& section, const std::string& key) const {
  auto items = split(entry(section, key).value, ',');
  for (const auto& item : items) {
    if (item.empty()) fail(section, key, "empty list item");
  }
  return items;
}

DiscreteMeasure read_measure_csv(std::istream& in, const std::string& source) {
  const NumericTable table = read_table(in, source, {"weight", "r_eff"});
  DiscreteMeasure mu;
  const auto count = static_cast<Eigen::Index>(table.rows.size());
  mu.points.resize(table.dim, count);
  mu.weights.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto& row = table.rows[i];
    for (int d = 0; d < table.dim; ++d) mu.points(d, i) = row[d];
    mu.weights[i] = row[table.dim];
    const double r = row[table.dim + 1];
    if (!(r > 0.0)) throw ConfigError(source, table.lines[i], "r_eff must be positive");
    mu.cells.push_back(Cell::volume_cell(r));
  }
  mu.validate();
  return mu;
}

DiscreteMeasure load_measure_csv(const std::string& path) {
  auto in = open_input(path);
  return read_measure_csv(in, path);
}

void write_measure_csv(std::ostream& out, const DiscreteMeasure& mu) {
  for (int d = 0; d < mu.dim(); ++d) out << 'x' << d + 1 << ',';
  out << "weight,r_eff\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    for (int d = 0; d < mu.dim(); ++d) out << mu.points(d, i) << ',';
    out << mu.weights[i] << ',' << mu.cells[i].radius() << '\n';
  }
}

PointCloud read_point_cloud_csv(std::istream& in, const std::string& source) {
  const NumericTable table = read_table(in, source, {"cell_radius"});
  PointCloud cloud;
  const auto count = static_cast<Eigen::Index>(table.rows.size());
  if (count == 0) throw ConfigError(source, 0, "point cloud has no points");
  cloud.points.resize(table.dim, count);
  cloud.cell_radii.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    for (int d = 0; d < table.dim; ++d) cloud.points(d, i) = table.rows[i][d];
    cloud.cell_radii[i] = table.rows[i][table.dim];
    if (!(cloud.cell_radii[i] > 0.0)) throw ConfigError(source, table.lines[i], "cell_radius must be positive");
  }
  return cloud;
}

PointCloud load_point_cloud_csv(const std::string& path) {
  auto in = open_input(path);
  return read_point_cloud_csv(in, path);
}

nlohmann::json to_json(const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

nlohmann::json to_json(const DiscreteMeasure& mu) {
  nlohmann::json points = nlohmann::json::array();
  nlohmann::json radii = nlohmann::json::array();
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    points.push_back(to_json(Point(mu.points.col(i))));
    radii.push_back(mu.cells[i].radius());
  }
  return {{"points", points},
          {"weights", std::vector<double>(mu.weights.data(), mu.weights.data() + mu.size())},
          {"radii", radii}};
}

DiscreteMeasure measure_from_json(const nlohmann::json& j) {
  try {
    const auto& points = j.at("points");
    const auto& weights = j.at("weights");
    if (!points.is_array() || !weights.is_array() || points.size() != weights.size()) {
      throw ParameterError("measure JSON: points and weights must be arrays of equal length");
    }
    const auto count = static_cast<Eigen::Index>(points.size());
    if (count == 0) throw ParameterError("measure JSON: no atoms");
    const auto n = static_cast<Eigen::Index>(points.at(0).size());
    DiscreteMeasure mu;
    mu.points.resize(n, count);
    mu.weights.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
      const auto& p = points.at(i);
      if (static_cast<Eigen::Index>(p.size()) != n) throw ParameterError("measure JSON: ragged points");
      for (Eigen::Index d = 0; d < n; ++d) mu.points(d, i) = p.at(d).get<double>();
      mu.weights[i] = weights.at(i).get<double>();
      const double r = j.contains("radii") ? j.at("radii").at(i).get<double>() : 1e-6;
      if (!(r > 0.0)) throw ParameterError("measure JSON: radii must be positive");
      mu.cells.push_back(Cell::volume_cell(r));
    }
    mu.validate();
    return mu;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("measure JSON: ") + e.what());
  }
}

nlohmann::json to_json(const ThinnessReport& report) {
  nlohmann::json shells = nlohmann::json::array();
  for (std::size_t i = 0; i < report.shell_caps.size(); ++i) {
    const auto& s = report.shell_caps[i];
    nlohmann::json row = {{"k", s.k},
                          {"capacity", s.capacity},
                          {"nodes", s.nodes},
                          {"reliable", s.reliable},
                          {"term", report.terms[i]},
                          {"partial_sum", report.partial_sums[i]}};
    if (!s.warning.empty()) row["warning"] = s.warning;
    shells.push_back(row);
  }
  return {{"shells", shells},
          {"tail_slope", report.tail_slope},
          {"capacity_slope", report.capacity_slope},
          {"thin_criterion", report.thin_criterion},
          {"ultrathin_criterion", report.ultrathin_criterion},
          {"verdict", to_string(report.verdict)},
          {"q", report.q},
          {"delta", report.delta},
          {"k_range", {report.k_lo, report.k_hi}}};
}

nlohmann::json to_json(const RegularityVerdict& verdict) {
  nlohmann::json shells = nlohmann::json::array();
  for (std::size_t i = 0; i < verdict.shell_caps.size(); ++i) {
    shells.push_back({{"k", verdict.shell_caps[i].k},
                      {"capacity", verdict.shell_caps[i].capacity},
                      {"nodes", verdict.shell_caps[i].nodes},
                      {"reliable", verdict.shell_caps[i].reliable},
                      {"term", verdict.series_terms[i]}});
  }
  return {{"y", to_json(verdict.y)},
          {"shells", shells},
          {"partial_sum", verdict.partial_sum},
          {"tail_slope", verdict.tail_slope},
          {"verdict", to_string(verdict.verdict)}};
}

nlohmann::json to_json(const HitStats& stats) {
  return {{"n_walkers", stats.n_walkers},
          {"hits", stats.hits},
          {"hit_probability", stats.hit_probability},
          {"std_error", stats.std_error},
          {"barycenter", to_json(stats.barycenter)},
          {"barycenter_std_error", to_json(stats.barycenter_std_error)},
          {"seed", stats.seed},
          {"epsilon", stats.epsilon},
          {"mean_steps", stats.mean_steps},
          {"recorded_hits", stats.hit_points.size()}};
}

void write_thinness_csv(std::ostream& out, const ThinnessReport& report) {
  out << "k,c_k,t_k,partial_sum\n" << std::setprecision(17);
  for (std::size_t i = 0; i < report.shell_caps.size(); ++i) {
    out << report.shell_caps[i].k << ',' << report.shell_caps[i].capacity << ',' << report.terms[i]
        << ',' << report.partial_sums[i] << '\n';
  }
}

void write_points_csv(std::ostream& out, const std::vector<Point>& points) {
  const int n = points.empty() ? 3 : static_cast<int>(points.front().size());
  for (int d = 0; d < n; ++d) out << (d ? "," : "") << 'x' << d + 1;
  out << '\n' << std::setprecision(17);
  for (const auto& p : points) {
    for (int d = 0; d < n; ++d) out << (d ? "," : "") << p[d];
    out << '\n';
  }
}

}  // namespace riesz
