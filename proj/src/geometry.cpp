#include "riesz/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace riesz {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kPi = std::numbers::pi;

void require(bool condition, const std::string& message) {
  if (!condition) throw ParameterError(message);
}

bool all_finite(const Point& p) { return p.allFinite(); }

double radial_norm(const Point& x) { return x.tail(x.size() - 1).norm(); }

// Smallest distance from y to an axis-aligned box.
double distance_to_box(const BoundingBox& box, const Point& y) {
  Point gap = (box.lo - y).cwiseMax(y - box.hi).cwiseMax(0.0);
  return gap.norm();
}

double farthest_distance_in_box(const BoundingBox& box, const Point& y) {
  Point far = (box.lo - y).cwiseAbs().cwiseMax((box.hi - y).cwiseAbs());
  return far.norm();
}

bool in_shell_range(double d, const ShellPiece& piece) {
  if (piece.direction == ShellDirection::outer) return d >= piece.r_inner && d < piece.r_outer;
  return d > piece.r_inner && d <= piece.r_outer;
}

Discretization make_disc(int n, std::shared_ptr<const ShapeSpec> parent, Eigen::Index count) {
  Discretization disc;
  disc.nodes.resize(n, count);
  disc.cell_measures.resize(count);
  disc.cells.resize(count);
  disc.axes = PointMatrix::Zero(n, count);
  disc.boundary_flags.assign(count, false);
  disc.parent = std::move(parent);
  return disc;
}

// Growable node buffer used by the generators.
struct NodeBuffer {
  int n;
  std::vector<double> coords;
  std::vector<double> axes;
  std::vector<double> measures;
  std::vector<Cell> cells;
  std::vector<bool> boundary;

  explicit NodeBuffer(int dim) : n(dim) {}

  void push(const Point& p, double measure, const Cell& cell, bool on_boundary,
            const Point* axis = nullptr) {
    coords.insert(coords.end(), p.data(), p.data() + n);
    if (axis) {
      axes.insert(axes.end(), axis->data(), axis->data() + n);
    } else {
      axes.insert(axes.end(), n, 0.0);
    }
    measures.push_back(measure);
    cells.push_back(cell);
    boundary.push_back(on_boundary);
  }

  Discretization finish(std::shared_ptr<const ShapeSpec> parent) const {
    const auto count = static_cast<Eigen::Index>(cells.size());
    Discretization disc = make_disc(n, std::move(parent), count);
    if (count > 0) {
      disc.nodes = Eigen::Map<const PointMatrix>(coords.data(), n, count);
      disc.axes = Eigen::Map<const PointMatrix>(axes.data(), n, count);
      disc.cell_measures = Eigen::Map<const Vector>(measures.data(), count);
    }
    disc.cells = cells;
    disc.boundary_flags = boundary;
    return disc;
  }
};

std::shared_ptr<const ShapeSpec> share(const ShapeSpec& shape) {
  return std::make_shared<const ShapeSpec>(shape);
}

// ---------------------------------------------------------------------------
// Volume grids.

double box_volume(const BoundingBox& box) { return (box.hi - box.lo).cwiseMax(0.0).prod(); }

// Quasi-Monte Carlo volume of a membership set inside a box.
double estimate_volume(const ShapeSpec& shape, const BoundingBox& box) {
  const int n = static_cast<int>(box.lo.size());
  const double vol = box_volume(box);
  if (vol <= 0.0) return 0.0;
  constexpr int kSamples = 16384;
  int inside = 0;
  Point x(n);
  for (int i = 1; i <= kSamples; ++i) {
    for (int d = 0; d < n; ++d) {
      x[d] = box.lo[d] + (box.hi[d] - box.lo[d]) * halton(i, nth_prime(d));
    }
    if (contains(shape, x)) ++inside;
  }
  return vol * inside / kSamples;
}

Discretization voxelize(const ShapeSpec& shape, const BoundingBox& box, double h,
                        std::shared_ptr<const ShapeSpec> parent) {
  const int n = static_cast<int>(box.lo.size());
  NodeBuffer buffer(n);
  std::vector<long> counts(n);
  Point mid = 0.5 * (box.lo + box.hi);
  for (int d = 0; d < n; ++d) {
    counts[d] = std::max<long>(1, static_cast<long>(std::round((box.hi[d] - box.lo[d]) / h)));
  }
  const double measure = std::pow(h, n);
  const Cell cell = Cell::volume_cell(h * std::pow(1.0 / unit_ball_volume(n), 1.0 / n));
  std::vector<long> index(n, 0);
  Point center(n);
  Point neighbor(n);
  long neighborhood = 1;
  for (int d = 0; d < n; ++d) neighborhood *= 3;
  while (true) {
    for (int d = 0; d < n; ++d) {
      center[d] = mid[d] + (static_cast<double>(index[d]) - 0.5 * (counts[d] - 1)) * h;
    }
    if (contains(shape, center)) {
      // The cube touches the boundary of the union of cubes iff one of its
      // face, edge or corner neighbors is missing.
      bool on_boundary = false;
      for (long code = 0; code < neighborhood && !on_boundary; ++code) {
        long rest = code;
        for (int d = 0; d < n; ++d) {
          neighbor[d] = center[d] + static_cast<double>(rest % 3 - 1) * h;
          rest /= 3;
        }
        on_boundary = !contains(shape, neighbor);
      }
      buffer.push(center, measure, cell, on_boundary);
    }
    int d = 0;
    while (d < n && ++index[d] == counts[d]) {
      index[d] = 0;
      ++d;
    }
    if (d == n) break;
  }
  return buffer.finish(std::move(parent));
}

Discretization voxelize_budget(const ShapeSpec& shape, double volume, const BoundingBox& box,
                               int resolution) {
  const int n = static_cast<int>(box.lo.size());
  auto parent = share(shape);
  if (volume <= 0.0) return empty_discretization(n, parent);
  double h = std::pow(volume / resolution, 1.0 / n);
  Discretization disc = voxelize(shape, box, h, parent);
  for (int attempt = 0; attempt < 4 && disc.empty(); ++attempt) {
    h *= 0.5;
    disc = voxelize(shape, box, h, parent);
  }
  return disc;
}

// ---------------------------------------------------------------------------
// Sphere panels.

template <typename Filter>
Discretization fibonacci_sphere(const Sphere& sphere, int count, const Filter& keep,
                                std::shared_ptr<const ShapeSpec> parent) {
  require(sphere.center.size() == 3, "sphere panels are defined for n = 3 only");
  NodeBuffer buffer(3);
  const double area = 4.0 * kPi * sphere.radius * sphere.radius / count;
  const Cell cell = Cell::panel_cell(std::sqrt(area / kPi));
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  Point normal(3);
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    normal << r * std::cos(phi), r * std::sin(phi), z;
    Point p = sphere.center + sphere.radius * normal;
    if (keep(p)) buffer.push(p, area, cell, true, &normal);
  }
  return buffer.finish(std::move(parent));
}

// ---------------------------------------------------------------------------
// Rotation bodies.

// Integer points of Z^dims in the closed ball of radius t; volume estimate
// once t is large.
double lattice_count(int dims, double t) {
  if (dims == 0) return 1.0;
  if (t > 40.0) return unit_ball_volume(dims) * std::pow(t, dims);
  const long reach = static_cast<long>(std::floor(t));
  double total = 0.0;
  for (long i = -reach; i <= reach; ++i) {
    total += lattice_count(dims - 1, std::sqrt(std::max(0.0, t * t - static_cast<double>(i * i))));
  }
  return total;
}

// Estimated node count of slicing x1 in [a, b] with thickness h.
double rotation_node_estimate(const RotationBody& body, double a, double b, double h) {
  constexpr int kSamples = 512;
  const double dx = (b - a) / kSamples;
  double total = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const double x = a + (i + 0.5) * dx;
    const double log_ratio = rotation_log_radius(body, x) - std::log(h);
    const double per_slice = log_ratio >= 0.0 ? lattice_count(body.dim - 1, std::exp(log_ratio)) : 1.0;
    total += per_slice * dx / h;
  }
  return total;
}

double rotation_slice_thickness(const RotationBody& body, double a, double b, int budget) {
  const double length = b - a;
  double h_hi = length;
  for (int i = 0; i < 60 && rotation_node_estimate(body, a, b, h_hi) > budget; ++i) h_hi *= 2.0;
  double h_lo = length / (1000.0 * budget);
  for (int i = 0; i < 80; ++i) {
    const double h = std::sqrt(h_lo * h_hi);
    if (rotation_node_estimate(body, a, b, h) > budget) {
      h_lo = h;
    } else {
      h_hi = h;
    }
  }
  return h_hi;
}

template <typename Filter>
Discretization slice_rotation_body(const RotationBody& body, double a, double b, int budget,
                                   const Filter& keep, std::shared_ptr<const ShapeSpec> parent) {
  const int n = body.dim;
  NodeBuffer buffer(n);
  if (!(b > a)) return buffer.finish(std::move(parent));
  const double h_target = rotation_slice_thickness(body, a, b, budget);
  const long slices = std::max<long>(1, static_cast<long>(std::floor((b - a) / h_target)));
  const double h = (b - a) / slices;
  const double vn1 = unit_ball_volume(n - 1);
  const double cube_measure = std::pow(h, n);
  const Cell cube = Cell::volume_cell(h * std::pow(1.0 / unit_ball_volume(n), 1.0 / n));
  Point axis = Point::Zero(n);
  axis[0] = 1.0;
  Point p(n);
  // Grid membership of slice j at lateral offset `lateral` (multiples of h).
  auto member = [&](long j, const std::vector<long>& lateral) {
    if (j < 0 || j >= slices) return false;
    Point q(n);
    q[0] = a + (j + 0.5) * h;
    double r2 = 0.0;
    bool on_axis = true;
    for (int d = 0; d < n - 1; ++d) {
      q[d + 1] = static_cast<double>(lateral[d]) * h;
      r2 += q[d + 1] * q[d + 1];
      on_axis = on_axis && lateral[d] == 0;
    }
    const double log_rho = rotation_log_radius(body, q[0]);
    if (log_rho < std::log(h)) return on_axis && keep(q);
    const double rho = std::exp(log_rho);
    return r2 <= rho * rho && keep(q);
  };
  auto touches_boundary = [&](long j, const std::vector<long>& lateral) {
    long neighborhood = 1;
    for (int d = 0; d < n; ++d) neighborhood *= 3;
    std::vector<long> shifted(n - 1);
    for (long code = 0; code < neighborhood; ++code) {
      long rest = code;
      const long dj = rest % 3 - 1;
      rest /= 3;
      for (int d = 0; d < n - 1; ++d) {
        shifted[d] = lateral[d] + rest % 3 - 1;
        rest /= 3;
      }
      if (!member(j + dj, shifted)) return true;
    }
    return false;
  };
  for (long j = 0; j < slices; ++j) {
    const double x1 = a + (j + 0.5) * h;
    const double log_rho = rotation_log_radius(body, x1);
    if (log_rho < std::log(h)) {
      p.setZero();
      p[0] = x1;
      if (!keep(p)) continue;
      const double measure =
          std::max(std::exp(std::log(vn1) + (n - 1) * log_rho + std::log(h)),
                   std::numeric_limits<double>::min());
      buffer.push(p, measure, Cell::bead_cell(log_rho, h), true, &axis);
      continue;
    }
    const double rho = std::exp(log_rho);
    const long reach = static_cast<long>(std::floor(rho / h));
    std::vector<long> index(n - 1, -reach);
    while (true) {
      p[0] = x1;
      double r2 = 0.0;
      for (int d = 0; d < n - 1; ++d) {
        p[d + 1] = static_cast<double>(index[d]) * h;
        r2 += p[d + 1] * p[d + 1];
      }
      if (r2 <= rho * rho && keep(p)) {
        buffer.push(p, cube_measure, cube, touches_boundary(j, index));
      }
      int d = 0;
      while (d < n - 1 && ++index[d] > reach) {
        index[d] = -reach;
        ++d;
      }
      if (d == n - 1) break;
    }
  }
  return buffer.finish(std::move(parent));
}

// x1 interval of the slices of `body` that can meet the shell around y.
std::pair<double, double> rotation_shell_range(const RotationBody& body, const Point& y,
                                               double r_inner, double r_outer) {
  const double a0 = std::max(body.x1_lo, y[0] - r_outer);
  const double b0 = std::min(body.x1_hi, y[0] + r_outer);
  if (!(b0 > a0)) return {0.0, 0.0};
  const double offset = radial_norm(y);
  constexpr int kSamples = 8192;
  double a = std::numeric_limits<double>::infinity();
  double b = -std::numeric_limits<double>::infinity();
  const double dx = (b0 - a0) / kSamples;
  for (int i = 0; i <= kSamples; ++i) {
    const double x = a0 + i * dx;
    const double rho = rotation_radius(body, x);
    const double axial = x - y[0];
    const double near = std::hypot(axial, std::max(0.0, offset - rho));
    const double far = std::hypot(axial, offset + rho);
    if (near < r_outer && far >= r_inner) {
      a = std::min(a, x - dx);
      b = std::max(b, x + dx);
    }
  }
  if (!(b > a)) return {0.0, 0.0};
  return {std::max(a, body.x1_lo), std::min(b, body.x1_hi)};
}

// ---------------------------------------------------------------------------
// Measures used for splitting a resolution budget across union parts.

struct MeasureInfo {
  double value = 0.0;
  bool surface = false;
};

MeasureInfo approximate_measure(const ShapeSpec& shape) {
  return std::visit(
      overloaded{
          [](const Ball& b) {
            const int n = static_cast<int>(b.center.size());
            return MeasureInfo{unit_ball_volume(n) * std::pow(b.radius, n), false};
          },
          [](const Sphere& s) { return MeasureInfo{4.0 * kPi * s.radius * s.radius, true}; },
          [](const Box& b) { return MeasureInfo{(b.hi - b.lo).prod(), false}; },
          [](const RotationBody& r) {
            constexpr int kSamples = 2048;
            const double dx = (r.x1_hi - r.x1_lo) / kSamples;
            double v = 0.0;
            for (int i = 0; i < kSamples; ++i) {
              v += std::exp((r.dim - 1) * rotation_log_radius(r, r.x1_lo + (i + 0.5) * dx)) * dx;
            }
            return MeasureInfo{unit_ball_volume(r.dim - 1) * v, false};
          },
          [](const Union& u) {
            MeasureInfo info;
            for (const auto& part : u.parts) {
              const auto m = approximate_measure(part);
              info.value += m.value;
              info.surface = m.surface;
            }
            return info;
          },
          [](const PointCloud& c) {
            return MeasureInfo{static_cast<double>(c.points.cols()), false};
          },
          [&shape](const Inverted&) {
            return MeasureInfo{estimate_volume(shape, bounding_box(shape)), false};
          },
          [&shape](const ShellPiece&) {
            return MeasureInfo{estimate_volume(shape, bounding_box(shape)), false};
          },
      },
      shape.shape);
}

bool surface_like(const ShapeSpec& shape) {
  return std::visit(overloaded{[](const Sphere&) { return true; },
                               [](const Union& u) {
                                 return !u.parts.empty() &&
                                        std::all_of(u.parts.begin(), u.parts.end(), surface_like);
                               },
                               [](const ShellPiece& p) { return surface_like(*p.base); },
                               [](const Inverted& i) { return surface_like(*i.base); },
                               [](const auto&) { return false; }},
                    shape.shape);
}

Discretization discretize_union(const std::vector<ShapeSpec>& parts, int resolution,
                                std::shared_ptr<const ShapeSpec> parent,
                                const std::function<Discretization(const ShapeSpec&, int)>& part_disc) {
  const int n = dimension(parts.front());
  std::vector<MeasureInfo> measures;
  bool mixed = false;
  for (const auto& part : parts) {
    measures.push_back(approximate_measure(part));
    if (measures.back().surface != measures.front().surface) mixed = true;
  }
  double total = 0.0;
  for (const auto& m : measures) total += m.value;
  Discretization result = empty_discretization(n, parent);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    double share_fraction = 1.0 / parts.size();
    if (!mixed && total > 0.0) share_fraction = measures[i].value / total;
    const int budget = std::max(1, static_cast<int>(std::lround(resolution * share_fraction)));
    Discretization disc = part_disc(parts[i], budget);
    if (i > 0 && !disc.empty()) {
      std::vector<bool> keep(disc.size(), true);
      for (Eigen::Index j = 0; j < disc.size(); ++j) {
        const Point p = disc.nodes.col(j);
        for (std::size_t earlier = 0; earlier < i && keep[j]; ++earlier) {
          if (!surface_like(parts[earlier]) && contains(parts[earlier], p)) keep[j] = false;
        }
        for (Eigen::Index k = 0; k < result.size() && keep[j]; ++k) {
          if ((result.nodes.col(k) - p).norm() < 1e-14) keep[j] = false;
        }
      }
      disc = restrict_nodes(disc, keep);
    }
    result = concatenate(result, disc);
  }
  result.parent = std::move(parent);
  return result;
}

Discretization discretize_shell_piece(const ShellPiece& piece, int resolution,
                                      std::shared_ptr<const ShapeSpec> parent);

Discretization discretize_impl(const ShapeSpec& shape, int resolution) {
  auto parent = share(shape);
  return std::visit(
      overloaded{
          [&](const Ball&) {
            return voxelize_budget(shape, approximate_measure(shape).value, bounding_box(shape),
                                   resolution);
          },
          [&](const Box&) {
            return voxelize_budget(shape, approximate_measure(shape).value, bounding_box(shape),
                                   resolution);
          },
          [&](const Sphere& s) {
            return fibonacci_sphere(s, resolution, [](const Point&) { return true; }, parent);
          },
          [&](const RotationBody& r) {
            return slice_rotation_body(r, r.x1_lo, r.x1_hi, resolution,
                                       [](const Point&) { return true; }, parent);
          },
          [&](const Union& u) {
            return discretize_union(u.parts, resolution, parent,
                                    [](const ShapeSpec& s, int res) { return discretize(s, res); });
          },
          [&](const PointCloud& c) {
            const int n = static_cast<int>(c.points.rows());
            Discretization disc = make_disc(n, parent, c.points.cols());
            disc.nodes = c.points;
            for (Eigen::Index i = 0; i < c.points.cols(); ++i) {
              disc.cells[i] = Cell::volume_cell(c.cell_radii[i]);
              disc.cell_measures[i] = unit_ball_volume(n) * std::pow(c.cell_radii[i], n);
              disc.boundary_flags[i] = true;
            }
            return disc;
          },
          [&](const Inverted& inv) {
            Discretization disc = invert_discretization(discretize(*inv.base, resolution), inv.center);
            disc.parent = parent;
            return disc;
          },
          [&](const ShellPiece& piece) { return discretize_shell_piece(piece, resolution, parent); },
      },
      shape.shape);
}

Discretization discretize_shell_piece(const ShellPiece& piece, int resolution,
                                      std::shared_ptr<const ShapeSpec> parent) {
  const ShapeSpec& base = *piece.base;
  const int n = dimension(base);
  const BoundingBox base_box = bounding_box(base);
  if (distance_to_box(base_box, piece.center) > piece.r_outer ||
      farthest_distance_in_box(base_box, piece.center) < piece.r_inner) {
    return empty_discretization(n, parent);
  }
  auto in_range = [&piece](const Point& p) {
    return in_shell_range((p - piece.center).norm(), piece);
  };
  return std::visit(
      overloaded{
          [&](const Sphere& s) -> Discretization {
            // Fraction of the sphere inside the shell, from a fine lattice.
            constexpr int kProbe = 20000;
            Discretization probe = fibonacci_sphere(s, kProbe, in_range, nullptr);
            if (probe.empty()) return empty_discretization(n, parent);
            const double fraction = static_cast<double>(probe.size()) / kProbe;
            const int total =
                static_cast<int>(std::min(4.0e6, std::ceil(resolution / fraction)));
            return fibonacci_sphere(s, std::max(total, resolution), in_range, parent);
          },
          [&](const RotationBody& r) -> Discretization {
            auto [a, b] = rotation_shell_range(r, piece.center, piece.r_inner, piece.r_outer);
            if (!(b > a)) return empty_discretization(n, parent);
            return slice_rotation_body(r, a, b, resolution, in_range, parent);
          },
          [&](const Union& u) -> Discretization {
            std::vector<ShapeSpec> parts;
            for (const auto& part : u.parts) {
              parts.emplace_back(ShellPiece{share(part), piece.center, piece.r_inner,
                                            piece.r_outer, piece.direction});
            }
            return discretize_union(parts, resolution, parent,
                                    [](const ShapeSpec& s, int res) { return discretize(s, res); });
          },
          [&](const Inverted& inv) -> Discretization {
            if ((inv.center - piece.center).norm() > 1e-14 * (1.0 + inv.center.norm())) {
              const ShapeSpec self{piece};
              const BoundingBox box = bounding_box(self);
              return voxelize_budget(self, estimate_volume(self, box), box, resolution);
            }
            // J maps {a < |x*| <= b} onto {1/b <= |x| < 1/a} and back.
            const ShellDirection flipped = piece.direction == ShellDirection::outer
                                               ? ShellDirection::inner
                                               : ShellDirection::outer;
            const double r_in = piece.r_outer > 0 ? 1.0 / piece.r_outer : 0.0;
            const double r_out = piece.r_inner > 0 ? 1.0 / piece.r_inner
                                                   : std::numeric_limits<double>::infinity();
            ShellPiece pre{inv.base, inv.center, r_in, r_out, flipped};
            Discretization disc =
                invert_discretization(discretize(ShapeSpec{pre}, resolution), inv.center);
            disc.parent = parent;
            return disc;
          },
          [&](const auto&) -> Discretization {
            const ShapeSpec self{piece};
            const BoundingBox box = bounding_box(self);
            return voxelize_budget(self, estimate_volume(self, box), box, resolution);
          },
      },
      base.shape);
}

}  // namespace

// ---------------------------------------------------------------------------

double unit_ball_volume(int n) {
  return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double rotation_log_radius(const RotationBody& body, double x1) {
  if (body.family == 1) {
    if (body.s == 0.0) return 0.0;
    return -body.s * std::log(x1);
  }
  return -std::pow(x1, body.s);
}

double rotation_radius(const RotationBody& body, double x1) {
  return std::exp(rotation_log_radius(body, x1));
}

void validate(const ShapeSpec& shape) {
  std::visit(
      overloaded{
          [](const Ball& b) {
            require(b.radius > 0.0, "ball radius must be positive");
            require(b.center.size() >= 3 && all_finite(b.center), "ball center must be finite, n >= 3");
          },
          [](const Sphere& s) {
            require(s.radius > 0.0, "sphere radius must be positive");
            require(s.center.size() >= 3 && all_finite(s.center),
                    "sphere center must be finite, n >= 3");
          },
          [](const Box& b) {
            require(b.lo.size() == b.hi.size() && b.lo.size() >= 3, "box corners need equal n >= 3");
            require((b.lo.array() < b.hi.array()).all(), "box requires lo < hi componentwise");
          },
          [](const RotationBody& r) {
            require(r.dim >= 3, "rotation body needs n >= 3");
            require(r.x1_lo >= 0.0 && r.x1_lo < r.x1_hi, "rotation body needs 0 <= x1_lo < x1_hi");
            switch (r.family) {
              case 1:
                require(r.s >= 0.0, "family 1 requires s >= 0");
                require(r.s == 0.0 || r.x1_lo > 0.0, "family 1 with s > 0 requires x1_lo > 0");
                break;
              case 2:
                require(r.s > 0.0 && r.s <= 1.0, "family 2 requires 0 < s <= 1");
                break;
              case 3:
                require(r.s > 1.0, "family 3 requires s > 1");
                break;
              default:
                throw ParameterError("rotation body family must be 1, 2 or 3");
            }
          },
          [](const Union& u) {
            require(!u.parts.empty(), "union must be nonempty");
            const int n = dimension(u.parts.front());
            for (const auto& part : u.parts) {
              validate(part);
              require(dimension(part) == n, "union parts must share the dimension");
            }
          },
          [](const PointCloud& c) {
            require(c.points.rows() >= 3, "point cloud needs n >= 3");
            require(c.cell_radii.size() == c.points.cols(), "one cell radius per point");
            require(c.points.allFinite(), "point cloud coordinates must be finite");
            require((c.cell_radii.array() > 0.0).all(), "cell radii must be positive");
          },
          [](const Inverted& i) {
            require(i.base != nullptr, "inverted shape needs a base");
            validate(*i.base);
            require(i.center.size() == dimension(*i.base), "inversion center dimension mismatch");
          },
          [](const ShellPiece& p) {
            require(p.base != nullptr, "shell piece needs a base");
            validate(*p.base);
            require(p.r_inner >= 0.0 && p.r_inner < p.r_outer, "shell radii must satisfy 0 <= r_in < r_out");
          },
      },
      shape.shape);
}

int dimension(const ShapeSpec& shape) {
  return std::visit(
      overloaded{[](const Ball& b) { return static_cast<int>(b.center.size()); },
                 [](const Sphere& s) { return static_cast<int>(s.center.size()); },
                 [](const Box& b) { return static_cast<int>(b.lo.size()); },
                 [](const RotationBody& r) { return r.dim; },
                 [](const Union& u) { return u.parts.empty() ? 0 : dimension(u.parts.front()); },
                 [](const PointCloud& c) { return static_cast<int>(c.points.rows()); },
                 [](const Inverted& i) { return dimension(*i.base); },
                 [](const ShellPiece& p) { return dimension(*p.base); }},
      shape.shape);
}

bool contains(const ShapeSpec& shape, const Point& x) {
  return std::visit(
      overloaded{
          [&](const Ball& b) { return (x - b.center).norm() <= b.radius; },
          [&](const Sphere& s) {
            return std::abs((x - s.center).norm() - s.radius) <= 1e-12 * s.radius;
          },
          [&](const Box& b) {
            return (x.array() >= b.lo.array()).all() && (x.array() <= b.hi.array()).all();
          },
          [&](const RotationBody& r) {
            if (x[0] < r.x1_lo || x[0] > r.x1_hi) return false;
            const double radial = radial_norm(x);
            if (radial == 0.0) return true;
            return std::log(radial) <= rotation_log_radius(r, x[0]);
          },
          [&](const Union& u) {
            return std::any_of(u.parts.begin(), u.parts.end(),
                               [&](const ShapeSpec& p) { return contains(p, x); });
          },
          [&](const PointCloud& c) {
            for (Eigen::Index i = 0; i < c.points.cols(); ++i) {
              if ((c.points.col(i) - x).norm() <= c.cell_radii[i]) return true;
            }
            return false;
          },
          [&](const Inverted& i) {
            if ((x - i.center).norm() == 0.0) return false;
            return contains(*i.base, invert_point(i.center, x));
          },
          [&](const ShellPiece& p) {
            return in_shell_range((x - p.center).norm(), p) && contains(*p.base, x);
          },
      },
      shape.shape);
}

bool filled_contains(const ShapeSpec& shape, const Point& x) {
  return std::visit(
      overloaded{
          [&](const Sphere& s) { return (x - s.center).norm() <= s.radius * (1.0 + 1e-12); },
          [&](const Union& u) {
            return std::any_of(u.parts.begin(), u.parts.end(),
                               [&](const ShapeSpec& p) { return filled_contains(p, x); });
          },
          [&](const Inverted& i) {
            if ((x - i.center).norm() == 0.0) return false;
            return filled_contains(*i.base, invert_point(i.center, x));
          },
          [&](const ShellPiece& p) {
            return in_shell_range((x - p.center).norm(), p) && filled_contains(*p.base, x);
          },
          [&](const auto&) { return contains(shape, x); },
      },
      shape.shape);
}

BoundingBox bounding_box(const ShapeSpec& shape) {
  return std::visit(
      overloaded{
          [](const Ball& b) {
            return BoundingBox{b.center.array() - b.radius, b.center.array() + b.radius};
          },
          [](const Sphere& s) {
            return BoundingBox{s.center.array() - s.radius, s.center.array() + s.radius};
          },
          [](const Box& b) { return BoundingBox{b.lo, b.hi}; },
          [](const RotationBody& r) {
            const double rho = rotation_radius(r, r.x1_lo);
            Point lo = Point::Constant(r.dim, -rho);
            Point hi = Point::Constant(r.dim, rho);
            lo[0] = r.x1_lo;
            hi[0] = r.x1_hi;
            return BoundingBox{lo, hi};
          },
          [](const Union& u) {
            BoundingBox box = bounding_box(u.parts.front());
            for (const auto& part : u.parts) {
              const BoundingBox b = bounding_box(part);
              box.lo = box.lo.cwiseMin(b.lo);
              box.hi = box.hi.cwiseMax(b.hi);
            }
            return box;
          },
          [](const PointCloud& c) {
            Point lo = Point::Constant(c.points.rows(), std::numeric_limits<double>::infinity());
            Point hi = -lo;
            for (Eigen::Index i = 0; i < c.points.cols(); ++i) {
              lo = lo.cwiseMin((c.points.col(i).array() - c.cell_radii[i]).matrix());
              hi = hi.cwiseMax((c.points.col(i).array() + c.cell_radii[i]).matrix());
            }
            return BoundingBox{lo, hi};
          },
          [](const Inverted& i) {
            const double gap = distance_to_box(bounding_box(*i.base), i.center);
            if (gap <= 0.0) {
              throw DomainError("bounding box of an inverted shape whose box contains the center");
            }
            return BoundingBox{i.center.array() - 1.0 / gap, i.center.array() + 1.0 / gap};
          },
          [](const ShellPiece& p) {
            BoundingBox box = bounding_box(*p.base);
            box.lo = box.lo.cwiseMax((p.center.array() - p.r_outer).matrix());
            box.hi = box.hi.cwiseMin((p.center.array() + p.r_outer).matrix());
            box.hi = box.hi.cwiseMax(box.lo);
            return box;
          },
      },
      shape.shape);
}

Vector Discretization::effective_radii() const {
  Vector r(size());
  for (Eigen::Index i = 0; i < size(); ++i) r[i] = cells[i].radius();
  return r;
}

Discretization empty_discretization(int n, std::shared_ptr<const ShapeSpec> parent) {
  return make_disc(n, std::move(parent), 0);
}

Discretization restrict_nodes(const Discretization& disc, const std::vector<bool>& mask) {
  const auto kept = static_cast<Eigen::Index>(std::count(mask.begin(), mask.end(), true));
  Discretization out = make_disc(disc.dim(), disc.parent, kept);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < disc.size(); ++i) {
    if (!mask[i]) continue;
    out.nodes.col(k) = disc.nodes.col(i);
    out.axes.col(k) = disc.axes.col(i);
    out.cell_measures[k] = disc.cell_measures[i];
    out.cells[k] = disc.cells[i];
    out.boundary_flags[k] = disc.boundary_flags[i];
    ++k;
  }
  return out;
}

Discretization concatenate(const Discretization& a, const Discretization& b) {
  if (a.dim() != b.dim()) throw ParameterError("cannot concatenate discretizations of different n");
  Discretization out = make_disc(a.dim(), a.parent, a.size() + b.size());
  out.nodes << a.nodes, b.nodes;
  out.axes << a.axes, b.axes;
  out.cell_measures << a.cell_measures, b.cell_measures;
  out.cells = a.cells;
  out.cells.insert(out.cells.end(), b.cells.begin(), b.cells.end());
  out.boundary_flags = a.boundary_flags;
  out.boundary_flags.insert(out.boundary_flags.end(), b.boundary_flags.begin(),
                            b.boundary_flags.end());
  return out;
}

Point invert_point(const Point& y, const Point& x) {
  if (x.size() != y.size()) throw ParameterError("invert_point: dimension mismatch");
  const Point d = x - y;
  const double r2 = d.squaredNorm();
  if (r2 == 0.0) throw DomainError("invert_point: x = y maps to the point at infinity");
  return y + d / r2;
}

Discretization discretize(const ShapeSpec& shape, int resolution) {
  if (resolution < 1) throw ParameterError("resolution must be >= 1");
  validate(shape);
  return discretize_impl(shape, resolution);
}

int shell_index(double d, double q, ShellDirection direction) {
  if (!(d > 0.0) || !std::isfinite(d)) throw ParameterError("shell_index needs 0 < d < inf");
  if (direction == ShellDirection::outer) {
    if (!(q > 1.0)) throw ParameterError("outer shells require q > 1");
    int k = static_cast<int>(std::floor(std::log(d) / std::log(q)));
    while (std::pow(q, k) > d) --k;
    while (std::pow(q, k + 1) <= d) ++k;
    return k;
  }
  if (!(q > 0.0 && q < 1.0)) throw ParameterError("inner shells require 0 < q < 1");
  int k = static_cast<int>(std::floor(std::log(d) / std::log(q)));
  while (d > std::pow(q, k)) --k;
  while (d <= std::pow(q, k + 1)) ++k;
  return k;
}

ShellDecomposition shell_decompose(const ShapeSpec& shape, const Point& y, double q, int k_lo,
                                   int k_hi, ShellDirection direction) {
  if (direction == ShellDirection::outer && !(q > 1.0)) {
    throw ParameterError("outer shells require q > 1");
  }
  if (direction == ShellDirection::inner && !(q > 0.0 && q < 1.0)) {
    throw ParameterError("inner shells require 0 < q < 1");
  }
  if (k_hi < k_lo) throw ParameterError("empty shell range");
  if (y.size() != dimension(shape)) throw ParameterError("shell center dimension mismatch");
  ShellDecomposition out{y, q, k_lo, k_hi, direction, {}};
  auto base = share(shape);
  for (int k = k_lo; k <= k_hi; ++k) {
    const double a = std::pow(q, k);
    const double b = std::pow(q, k + 1);
    ShellPiece piece{base, y, std::min(a, b), std::max(a, b), direction};
    out.pieces.emplace_back(piece);
  }
  return out;
}

std::vector<Discretization> partition_nodes(const Discretization& disc,
                                            const ShellDecomposition& decomposition) {
  const int count = decomposition.k_hi - decomposition.k_lo + 1;
  std::vector<std::vector<bool>> masks(count, std::vector<bool>(disc.size(), false));
  for (Eigen::Index i = 0; i < disc.size(); ++i) {
    const double d = (disc.nodes.col(i) - decomposition.center).norm();
    if (d == 0.0) continue;
    const int k = shell_index(d, decomposition.q, decomposition.direction);
    if (k >= decomposition.k_lo && k <= decomposition.k_hi) masks[k - decomposition.k_lo][i] = true;
  }
  std::vector<Discretization> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    Discretization piece = restrict_nodes(disc, masks[k]);
    piece.parent = std::make_shared<const ShapeSpec>(decomposition.pieces[k]);
    out.push_back(std::move(piece));
  }
  return out;
}

Discretization invert_discretization(const Discretization& disc, const Point& y) {
  const int n = disc.dim();
  if (y.size() != n) throw ParameterError("inversion center dimension mismatch");
  const double cube_factor = std::pow(unit_ball_volume(n), 1.0 / n);
  std::vector<bool> keep(disc.size(), true);
  for (Eigen::Index i = 0; i < disc.size(); ++i) {
    const Cell& cell = disc.cells[i];
    const double d = (disc.nodes.col(i) - y).norm();
    double extent = 0.0;
    switch (cell.kind) {
      case CellKind::volume:
        extent = 0.5 * cell.radius() * cube_factor * std::sqrt(static_cast<double>(n));
        break;
      case CellKind::panel:
        extent = cell.radius();
        break;
      case CellKind::bead:
        extent = std::max(0.5 * cell.length, cell.radius());
        break;
    }
    if (d <= extent) keep[i] = false;
  }
  Discretization out = restrict_nodes(disc, keep);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const Point rel = out.nodes.col(i) - y;
    const double d = rel.norm();
    const Point u = rel / d;
    out.nodes.col(i) = y + rel / (d * d);
    Cell& cell = out.cells[i];
    const double log_scale = -2.0 * std::log(d);
    cell.log_radius += log_scale;
    cell.length *= 1.0 / (d * d);
    const int cell_dim = cell.kind == CellKind::panel ? n - 1 : n;
    out.cell_measures[i] =
        std::max(out.cell_measures[i] * std::exp(cell_dim * log_scale),
                 std::numeric_limits<double>::min());
    const Point axis = out.axes.col(i);
    out.axes.col(i) = axis - 2.0 * axis.dot(u) * u;
  }
  return out;
}

Discretization invert_shape(const ShapeSpec& shape, const Point& y, int resolution) {
  Discretization disc = invert_discretization(discretize(shape, resolution), y);
  disc.parent = std::make_shared<const ShapeSpec>(
      Inverted{std::make_shared<const ShapeSpec>(shape), y});
  return disc;
}

}  // namespace riesz
