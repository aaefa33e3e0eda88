#pragma once

#include "riesz/geometry.hpp"
#include "riesz/kernel.hpp"
#include "riesz/qp.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace riesz {

struct KktSummary {
  double stationarity = 0.0;
  double dual = 0.0;
  double tolerance = 0.0;
  int iterations = 0;
  double objective = 0.0;
  Eigen::Index support = 0;
  std::vector<Eigen::Index> rejected;

  static KktSummary from(const QpSolution<double>& sol);
};

struct EquilibriumResult {
  DiscreteMeasure measure;
  double capacity_mass = 0.0;    // gamma(R^n)
  double capacity_energy = 0.0;  // ||gamma||^2
  KktSummary kkt;
};

struct BalayageResult {
  DiscreteMeasure swept;
  double source_mass = 0.0;
  double swept_mass = 0.0;
  // max over nodes carrying mass of |kappa mu^A - kappa mu|
  double potential_gap_on_A = 0.0;
  // min over probe points of kappa mu - kappa mu^A; +inf without probes
  double contraction_margin = 0.0;
  Vector target;  // kappa mu seen by each cell
  KktSummary kkt;
};

struct SupportProfile {
  double interior_mass_fraction = 0.0;
  double boundary_mass_fraction = 0.0;
  Vector per_cell_masses;
  bool empty = true;
};

struct BalayageOptions {
  double tol = 1e-9;
  int probe_count = 1000;
  std::uint64_t seed = 0;
  // Explicit probe points; generated from the discretization when absent.
  std::optional<PointMatrix> probes;
};

// Quasi-random probe points in the cube of side 3 x (diameter of the node
// set) around its bounding-box center. Points within one effective radius of
// a node or of an atom of `avoid`, and points filled by the parent shape, are
// skipped.
PointMatrix probe_points(const Discretization& disc, int count, std::uint64_t seed,
                         const DiscreteMeasure* avoid = nullptr);

EquilibriumResult equilibrium(const KernelParams& params, const Discretization& disc, double tol = 1e-9);
EquilibriumResult equilibrium(const KernelParams& params, const Discretization& disc,
                              const Matrix& gram, double tol = 1e-9);

BalayageResult balayage(const KernelParams& params, const DiscreteMeasure& mu,
                        const Discretization& disc, const BalayageOptions& options = {});
BalayageResult balayage(const KernelParams& params, const DiscreteMeasure& mu,
                        const Discretization& disc, const Matrix& gram,
                        const BalayageOptions& options = {});

// Balayage of the unit Dirac mass at y.
BalayageResult harmonic_measure(const KernelParams& params, const Point& y,
                                const Discretization& disc, const BalayageOptions& options = {});

struct HarmonicMassIdentity {
  double mass = 0.0;                // eps_y^A(R^n)
  double eq_potential_at_y = 0.0;   // kappa gamma_A(y), seen through the same cell rule
  double gap = 0.0;
  EquilibriumResult equilibrium;
  BalayageResult harmonic;
};

HarmonicMassIdentity harmonic_mass_identity(const KernelParams& params, const Point& y,
                                            const Discretization& disc,
                                            const BalayageOptions& options = {});

// Weights of a measure carried by the nodes of disc, in node order. Throws
// ParameterError when an atom is not a node.
Vector node_weights(const DiscreteMeasure& mu, const Discretization& disc);

SupportProfile support_profile(const KernelParams& params, const DiscreteMeasure& swept,
                               const Discretization& disc);

struct ExhaustionRow {
  int step = 0;
  Eigen::Index nodes = 0;
  double mass = 0.0;             // capacity (equilibrium) or swept mass
  double strong_distance = 0.0;  // ||nu_k - nu_final||
  double max_potential_gap = 0.0;
  // min over probes of kappa nu_k - kappa nu_(k-1); +inf on the first row
  double potential_increment = 0.0;
};

struct ExhaustionTable {
  std::vector<ExhaustionRow> rows;
  bool masses_nondecreasing = true;
  bool potentials_nondecreasing = true;
  bool distances_nonincreasing = true;
};

// Solves on each of the nested discretizations, for the equilibrium problem
// when `source` is empty and the sweep of *source otherwise. Throws
// ParameterError when the node sets are not nested.
ExhaustionTable exhaustion_run(const KernelParams& params, const std::vector<Discretization>& nested,
                               const std::optional<DiscreteMeasure>& source,
                               const PointMatrix& probes, double tol = 1e-9);

struct AdditivityReport {
  double max_deviation = 0.0;      // |sweep(sum) - sum(sweeps)| atomwise
  double passthrough_deviation = 0.0;  // parts on the nodes versus their own sweep
  bool all_interior = true;
};

AdditivityReport additivity_check(const KernelParams& params, const std::vector<DiscreteMeasure>& parts,
                                  const Discretization& disc, double tol = 1e-9);

// True when every weight exceeds 1e-12 of the total mass.
bool interior_solution(const Vector& weights);

}  // namespace riesz
