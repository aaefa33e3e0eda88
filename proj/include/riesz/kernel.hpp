#pragma once

#include "riesz/core.hpp"
#include "riesz/geometry.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace riesz {

// kappa_alpha(x, y) = |x - y|^(alpha - n), 0 < alpha <= 2, n >= 3.
struct KernelParams {
  double alpha = 2.0;
  int n = 3;

  double exponent() const { return alpha - n; }
  bool newtonian() const { return alpha == 2.0 && n == 3; }
  void validate() const;
};

// Kernel as a function of distance; +inf at distance 0.
template <typename Scalar>
Scalar riesz_kernel(const KernelParams& params, Scalar distance) {
  if (distance == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  if (params.newtonian()) return Scalar(1) / distance;
  return std::pow(distance, static_cast<Scalar>(params.exponent()));
}

template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar kernel_eval(const KernelParams& params,
                                      const Eigen::MatrixBase<DerivedX>& x,
                                      const Eigen::MatrixBase<DerivedY>& y) {
  return riesz_kernel(params, (x - y).norm());
}

// Finite atomic measure. Each atom carries the cell it stands for; the cell
// only matters for the regularized self-interaction of the atom.
struct DiscreteMeasure {
  PointMatrix points;  // n x N
  Vector weights;
  std::vector<Cell> cells;

  int dim() const { return static_cast<int>(points.rows()); }
  Eigen::Index size() const { return points.cols(); }
  double total_mass() const { return weights.sum(); }
  Vector effective_radii() const;

  // Throws ParameterError on length mismatches, negative or non-finite weights.
  void validate() const;

  static DiscreteMeasure empty(int n);
  // Weighted Dirac mass at p, regularized as a volume cell of the given radius.
  static DiscreteMeasure dirac(const Point& p, double weight = 1.0, double cell_radius = 1e-6);
  // Measure living on the nodes of a discretization.
  static DiscreteMeasure on_nodes(const Discretization& disc, const Vector& weights);
};

DiscreteMeasure operator+(const DiscreteMeasure& a, const DiscreteMeasure& b);
DiscreteMeasure operator*(double factor, const DiscreteMeasure& mu);

// Average of the kernel over a cell, seen from its own center: the
// regularized diagonal entry.
//   volume: (n / alpha) r^(alpha - n)
//   panel:  2 r^(alpha - n) / (alpha - n + 2), n = 3 and alpha > 1 only
//   bead:   (1/L) \int_{-L/2}^{L/2} (t^2 + r^2)^((alpha - n)/2) dt
double self_kernel(const KernelParams& params, const Cell& cell);

// Average of kappa(., source) over the cell around `node`. Volume cells use
// the exact ball average (closed form for the Newtonian kernel), panels a
// polar quadrature around the foot of the source; beads fall back to the
// point value.
double cell_average_kernel(const KernelParams& params, const Point& node, const Cell& cell,
                           const Point& axis, const Point& source);

// Sum of w_i kappa(x, p_i), with the cell self-value when x sits on an atom.
double potential(const KernelParams& params, const DiscreteMeasure& mu, const Point& x);

// Potential at each column of `points`.
Vector potential(const KernelParams& params, const DiscreteMeasure& mu, const PointMatrix& points);

// Right-hand side of the sweeping problem: the potential of mu seen by every
// cell of disc. Atoms on a node give that node's column of the kernel
// matrix; other atoms within two cell radii of a node use the cell average;
// everything else is point evaluated.
Vector cell_potentials(const KernelParams& params, const DiscreteMeasure& mu,
                       const Discretization& disc);

// Gram matrix of the energy inner product on the nodes of disc. Throws
// AssemblyError on nodes closer than 1e-14.
Matrix kernel_matrix(const KernelParams& params, const Discretization& disc);

// sum_ij w_i v_j kappa(p_i, q_j), coincident atoms use the cell self-value
// (the mean of the two when the cells differ).
double mutual_energy(const KernelParams& params, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Kelvin transform with respect to the unit sphere centered at y: atoms move
// to J_y(p), weights pick up |p - y|^(alpha - n), cells scale by |p - y|^-2.
// Throws DomainError if an atom sits at y.
DiscreteMeasure kelvin_transform(const KernelParams& params, const Point& y, const DiscreteMeasure& nu);

}  // namespace riesz
