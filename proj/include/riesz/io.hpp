#pragma once

#include "riesz/geometry.hpp"
#include "riesz/kernel.hpp"
#include "riesz/mc_oracle.hpp"
#include "riesz/thinness.hpp"

#include <json.hpp>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace riesz {

// Malformed configuration or data file. The message starts with
// "<source>:<line>:" when a line is known.
class ConfigError : public ParameterError {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

// Flat key = value text with [section] headers. Keys before the first header
// go to section "". Lines starting with # or ; are comments.
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ConfigFile parse(std::istream& in, const std::string& source = "<config>");
  static ConfigFile load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  // Section names in order of first appearance.
  const std::vector<std::string>& sections() const { return order_; }
  const std::map<std::string, Entry>& section(const std::string& name) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  Point get_point(const std::string& section, const std::string& key) const;
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;

  // Error located at the entry, or at the section header when key is empty.
  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& message) const;
  const std::string& source() const { return source_; }

 private:
  const Entry& entry(const std::string& section, const std::string& key) const;

  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> data_;
  std::map<std::string, int> section_lines_;
  std::vector<std::string> order_;
};

// Measure CSV: header x1,...,xn,weight,r_eff; one atom per row. Atoms become
// volume cells of radius r_eff.
DiscreteMeasure read_measure_csv(std::istream& in, const std::string& source = "<measure>");
DiscreteMeasure load_measure_csv(const std::string& path);
void write_measure_csv(std::ostream& out, const DiscreteMeasure& mu);

// Point cloud CSV: header x1,...,xn,cell_radius.
PointCloud read_point_cloud_csv(std::istream& in, const std::string& source = "<points>");
PointCloud load_point_cloud_csv(const std::string& path);

nlohmann::json to_json(const Point& p);
nlohmann::json to_json(const DiscreteMeasure& mu);
// Accepts {"points": [[...], ...], "weights": [...], "radii": [...]}; radii
// are optional.
DiscreteMeasure measure_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ThinnessReport& report);
nlohmann::json to_json(const RegularityVerdict& verdict);
nlohmann::json to_json(const HitStats& stats);

// Columns k, c_k, t_k, partial_sum.
void write_thinness_csv(std::ostream& out, const ThinnessReport& report);
void write_points_csv(std::ostream& out, const std::vector<Point>& points);

}  // namespace riesz
