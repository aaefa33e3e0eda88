#pragma once

#include "riesz/core.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace riesz {

// Cell shapes behind each quadrature node. The self-energy regularization in
// the kernel module depends on the kind.
enum class CellKind {
  volume,  // equal-volume ball of radius r
  panel,   // flat equal-area disk of radius r (n = 3 surfaces)
  bead,    // slender cylinder of length `length` and cross-section radius r
};

struct Cell {
  CellKind kind = CellKind::volume;
  // Natural log of the effective radius. Thin-body beads reach radii far
  // below the double range, so the radius is kept in log form.
  double log_radius = 0.0;
  double length = 0.0;  // beads only

  double radius() const { return std::exp(log_radius); }

  static Cell volume_cell(double radius) { return {CellKind::volume, std::log(radius), 0.0}; }
  static Cell panel_cell(double radius) { return {CellKind::panel, std::log(radius), 0.0}; }
  static Cell bead_cell(double log_radius, double length) {
    return {CellKind::bead, log_radius, length};
  }
};

struct ShapeSpec;

struct Ball {
  Point center;
  double radius = 1.0;
};

struct Sphere {
  Point center;
  double radius = 1.0;
};

struct Box {
  Point lo;
  Point hi;
};

// Solid of revolution about the x1 axis,
//   { x : x1 in [x1_lo, x1_hi], x2^2 + ... + xn^2 <= rho(x1)^2 }
// with rho_1 = x1^-s, rho_2 = rho_3 = exp(-x1^s).
struct RotationBody {
  int family = 1;
  double s = 0.0;
  double x1_lo = 0.0;
  double x1_hi = 1.0;
  int dim = 3;
};

struct Union {
  std::vector<ShapeSpec> parts;
};

struct PointCloud {
  PointMatrix points;
  Vector cell_radii;
};

// Image J_center(base \ {center}) under the inversion in the unit sphere.
struct Inverted {
  std::shared_ptr<const ShapeSpec> base;
  Point center;
};

enum class ShellDirection { outer, inner };

// base ∩ { r_inner <= |x - center| < r_outer } for outer shells,
// base ∩ { r_inner <  |x - center| <= r_outer } for inner shells.
struct ShellPiece {
  std::shared_ptr<const ShapeSpec> base;
  Point center;
  double r_inner = 0.0;
  double r_outer = 0.0;
  ShellDirection direction = ShellDirection::outer;
};

struct ShapeSpec {
  std::variant<Ball, Sphere, Box, RotationBody, Union, PointCloud, Inverted, ShellPiece> shape;

  ShapeSpec() = default;
  template <typename T>
  ShapeSpec(T value) : shape(std::move(value)) {}  // NOLINT(google-explicit-constructor)
};

// Throws ParameterError on violated invariants (radius > 0, x1_lo < x1_hi,
// family/s ranges, nonempty unions, matching dimensions).
void validate(const ShapeSpec& shape);

// Ambient dimension n of a shape.
int dimension(const ShapeSpec& shape);

// Point membership. Spheres are surfaces: membership means |x - c| = r to
// within 1e-12 relative.
bool contains(const ShapeSpec& shape, const Point& x);

// Membership in the shape together with the bounded components of its
// complement (a sphere fills to its ball). Used to keep probe points in the
// unbounded complementary domain.
bool filled_contains(const ShapeSpec& shape, const Point& x);

// Axis-aligned bounding box.
struct BoundingBox {
  Point lo;
  Point hi;
  double diameter() const { return (hi - lo).norm(); }
};
BoundingBox bounding_box(const ShapeSpec& shape);

struct Discretization {
  PointMatrix nodes;        // n x N
  Vector cell_measures;     // volume (or surface area for panels)
  std::vector<Cell> cells;  // effective radii and cell kinds
  PointMatrix axes;         // panel normals / bead axes, zero for volume cells
  std::vector<bool> boundary_flags;
  std::shared_ptr<const ShapeSpec> parent;

  int dim() const { return static_cast<int>(nodes.rows()); }
  Eigen::Index size() const { return nodes.cols(); }
  bool empty() const { return nodes.cols() == 0; }
  Vector effective_radii() const;
  double total_measure() const { return cell_measures.sum(); }
};

// Empty discretization in dimension n.
Discretization empty_discretization(int n, std::shared_ptr<const ShapeSpec> parent = nullptr);

// Subset of the nodes selected by mask, order preserved.
Discretization restrict_nodes(const Discretization& disc, const std::vector<bool>& mask);

// Concatenation of node sets.
Discretization concatenate(const Discretization& a, const Discretization& b);

// J_y(x) = y + (x - y) / |x - y|^2. Throws DomainError for x = y.
Point invert_point(const Point& y, const Point& x);

// Quadrature representation of a shape with approximately `resolution`
// nodes. Volume shapes use midpoint-clipped cubes, spheres a Fibonacci
// lattice of equal-area panels, rotation bodies slices of cubes that fall
// back to beads where the cross-section is thinner than the slice.
Discretization discretize(const ShapeSpec& shape, int resolution);

// Radius of a rotation body's cross-section at x1, in log form.
double rotation_log_radius(const RotationBody& body, double x1);
double rotation_radius(const RotationBody& body, double x1);

// Shell index k of a distance d: q^k <= d < q^(k+1) (outer, q > 1) or
// q^(k+1) < d <= q^k (inner, 0 < q < 1).
int shell_index(double d, double q, ShellDirection direction);

struct ShellDecomposition {
  Point center;
  double q = 2.0;
  int k_lo = 1;
  int k_hi = 12;
  ShellDirection direction = ShellDirection::outer;
  std::vector<ShapeSpec> pieces;  // pieces[i] is shell k_lo + i
};

// Throws ParameterError when q does not match the direction or the k range is
// empty.
ShellDecomposition shell_decompose(const ShapeSpec& shape, const Point& y, double q, int k_lo,
                                   int k_hi, ShellDirection direction);

// Splits an existing discretization by shell index; nodes outside the k range
// are dropped.
std::vector<Discretization> partition_nodes(const Discretization& disc,
                                            const ShellDecomposition& decomposition);

// Applies J_y to every node of `disc`. Cells whose extent contains y are
// dropped. Measures pick up the Jacobian |x - y|^(-2m) of their
// m-dimensional cell, radii and bead lengths the linear factor |x - y|^-2.
Discretization invert_discretization(const Discretization& disc, const Point& y);

// invert_discretization(discretize(shape, resolution), y).
Discretization invert_shape(const ShapeSpec& shape, const Point& y, int resolution);

// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

}  // namespace riesz
