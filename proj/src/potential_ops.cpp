#include "riesz/potential_ops.hpp"

#include <algorithm>
#include <limits>

namespace riesz {

namespace {

constexpr double kCoincident = 1e-14;

Eigen::Index find_node(const Discretization& disc, const Point& p, Eigen::Index hint) {
  if (hint >= 0 && hint < disc.size() && (disc.nodes.col(hint) - p).norm() < kCoincident) return hint;
  for (Eigen::Index i = 0; i < disc.size(); ++i) {
    if ((disc.nodes.col(i) - p).norm() < kCoincident) return i;
  }
  return -1;
}

double strong_distance(const KernelParams& params, const DiscreteMeasure& a, const DiscreteMeasure& b) {
  const double d2 = mutual_energy(params, a, a) - 2.0 * mutual_energy(params, a, b) +
                    mutual_energy(params, b, b);
  return std::sqrt(std::max(0.0, d2));
}

}  // namespace

KktSummary KktSummary::from(const QpSolution<double>& sol) {
  return {sol.kkt_stationarity, sol.kkt_feasibility_dual, sol.tolerance, sol.iterations,
          sol.objective,        sol.support_size(),       sol.rejected};
}

bool interior_solution(const Vector& weights) {
  if (weights.size() == 0) return false;
  const double total = weights.sum();
  return total > 0.0 && (weights.array() > 1e-12 * total).all();
}

PointMatrix probe_points(const Discretization& disc, int count, std::uint64_t seed,
                         const DiscreteMeasure* avoid) {
  const int n = disc.dim();
  PointMatrix out(n, 0);
  if (disc.empty() || count <= 0) return out;
  const Point lo = disc.nodes.rowwise().minCoeff();
  const Point hi = disc.nodes.rowwise().maxCoeff();
  const Point mid = 0.5 * (lo + hi);
  const double diameter = std::max((hi - lo).norm(), disc.effective_radii().maxCoeff());
  const double half = 1.5 * diameter;
  const Vector radii = disc.effective_radii();
  std::vector<double> coords;
  Point x(n);
  const std::uint64_t start = 1 + seed * 7919;
  const std::uint64_t max_attempts = static_cast<std::uint64_t>(count) * 200;
  int accepted = 0;
  for (std::uint64_t k = 0; k < max_attempts && accepted < count; ++k) {
    for (int d = 0; d < n; ++d) x[d] = mid[d] + half * (2.0 * halton(start + k, nth_prime(d)) - 1.0);
    if (disc.parent && filled_contains(*disc.parent, x)) continue;
    bool near = false;
    for (Eigen::Index i = 0; i < disc.size() && !near; ++i) {
      near = (disc.nodes.col(i) - x).norm() <= radii[i];
    }
    if (avoid) {
      for (Eigen::Index i = 0; i < avoid->size() && !near; ++i) {
        near = (avoid->points.col(i) - x).norm() <= std::max(avoid->cells[i].radius(), 1e-12);
      }
    }
    if (near) continue;
    coords.insert(coords.end(), x.data(), x.data() + n);
    ++accepted;
  }
  out = Eigen::Map<const PointMatrix>(coords.data(), n, accepted);
  return out;
}

EquilibriumResult equilibrium(const KernelParams& params, const Discretization& disc, double tol) {
  params.validate();
  if (disc.empty()) {
    EquilibriumResult result;
    result.measure = DiscreteMeasure::empty(disc.dim());
    return result;
  }
  return equilibrium(params, disc, kernel_matrix(params, disc), tol);
}

EquilibriumResult equilibrium(const KernelParams& params, const Discretization& disc,
                              const Matrix& gram, double tol) {
  params.validate();
  EquilibriumResult result;
  if (disc.empty()) {
    result.measure = DiscreteMeasure::empty(disc.dim());
    return result;
  }
  QpOptions<double> options;
  options.tol = tol;
  const Vector ones = Vector::Ones(disc.size());
  const auto sol = solve_gauss_qp(gram, ones, options);
  result.measure = DiscreteMeasure::on_nodes(disc, sol.weights);
  result.capacity_mass = sol.weights.sum();
  result.capacity_energy = sol.weights.dot(gram * sol.weights);
  result.kkt = KktSummary::from(sol);
  return result;
}

BalayageResult balayage(const KernelParams& params, const DiscreteMeasure& mu,
                        const Discretization& disc, const BalayageOptions& options) {
  params.validate();
  mu.validate();
  if (disc.empty()) {
    BalayageResult result;
    result.swept = DiscreteMeasure::empty(disc.dim());
    result.source_mass = mu.total_mass();
    result.contraction_margin = std::numeric_limits<double>::infinity();
    return result;
  }
  return balayage(params, mu, disc, kernel_matrix(params, disc), options);
}

BalayageResult balayage(const KernelParams& params, const DiscreteMeasure& mu,
                        const Discretization& disc, const Matrix& gram,
                        const BalayageOptions& options) {
  params.validate();
  mu.validate();
  BalayageResult result;
  result.source_mass = mu.total_mass();
  result.contraction_margin = std::numeric_limits<double>::infinity();
  if (disc.empty()) {
    result.swept = DiscreteMeasure::empty(disc.dim());
    return result;
  }
  result.target = cell_potentials(params, mu, disc);
  QpOptions<double> qp_options;
  qp_options.tol = options.tol;
  const auto sol = solve_gauss_qp(gram, result.target, qp_options);
  result.swept = DiscreteMeasure::on_nodes(disc, sol.weights);
  result.swept_mass = sol.weights.sum();
  result.kkt = KktSummary::from(sol);

  const Vector swept_potential = gram * sol.weights;
  for (Eigen::Index i = 0; i < disc.size(); ++i) {
    if (sol.weights[i] > 0.0) {
      result.potential_gap_on_A =
          std::max(result.potential_gap_on_A, std::abs(swept_potential[i] - result.target[i]));
    }
  }

  const PointMatrix probes =
      options.probes ? *options.probes : probe_points(disc, options.probe_count, options.seed, &mu);
  if (probes.cols() > 0) {
    const Vector source = potential(params, mu, probes);
    const Vector swept = potential(params, result.swept, probes);
    result.contraction_margin = (source - swept).minCoeff();
  }
  return result;
}

BalayageResult harmonic_measure(const KernelParams& params, const Point& y,
                                const Discretization& disc, const BalayageOptions& options) {
  return balayage(params, DiscreteMeasure::dirac(y), disc, options);
}

HarmonicMassIdentity harmonic_mass_identity(const KernelParams& params, const Point& y,
                                            const Discretization& disc,
                                            const BalayageOptions& options) {
  if (disc.empty()) throw ParameterError("harmonic_mass_identity: empty discretization");
  const Matrix gram = kernel_matrix(params, disc);
  HarmonicMassIdentity out;
  out.equilibrium = equilibrium(params, disc, gram, options.tol);
  out.harmonic = balayage(params, DiscreteMeasure::dirac(y), disc, gram, options);
  out.mass = out.harmonic.swept_mass;
  out.eq_potential_at_y = out.equilibrium.measure.weights.dot(out.harmonic.target);
  out.gap = std::abs(out.mass - out.eq_potential_at_y);
  return out;
}

Vector node_weights(const DiscreteMeasure& mu, const Discretization& disc) {
  Vector w = Vector::Zero(disc.size());
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    if (mu.weights[j] == 0.0) continue;
    const Eigen::Index i = find_node(disc, mu.points.col(j), j);
    if (i < 0) throw ParameterError("measure has an atom that is not a node of the discretization");
    w[i] += mu.weights[j];
  }
  return w;
}

SupportProfile support_profile(const KernelParams& params, const DiscreteMeasure& swept,
                               const Discretization& disc) {
  params.validate();
  SupportProfile profile;
  profile.per_cell_masses = node_weights(swept, disc);
  const double total = profile.per_cell_masses.sum();
  if (!(total > 0.0)) return profile;
  double boundary = 0.0;
  double interior = 0.0;
  for (Eigen::Index i = 0; i < disc.size(); ++i) {
    (disc.boundary_flags[i] ? boundary : interior) += profile.per_cell_masses[i];
  }
  profile.empty = false;
  profile.boundary_mass_fraction = boundary / total;
  profile.interior_mass_fraction = interior / total;
  return profile;
}

ExhaustionTable exhaustion_run(const KernelParams& params, const std::vector<Discretization>& nested,
                               const std::optional<DiscreteMeasure>& source,
                               const PointMatrix& probes, double tol) {
  if (nested.empty()) throw ParameterError("exhaustion_run: no steps");
  for (std::size_t k = 0; k + 1 < nested.size(); ++k) {
    for (Eigen::Index i = 0; i < nested[k].size(); ++i) {
      if (find_node(nested[k + 1], nested[k].nodes.col(i), -1) < 0) {
        throw ParameterError("exhaustion_run: step " + std::to_string(k) +
                             " is not contained in the next step");
      }
    }
  }
  std::vector<DiscreteMeasure> solutions;
  std::vector<Vector> probe_potentials;
  for (const auto& disc : nested) {
    DiscreteMeasure nu = DiscreteMeasure::empty(disc.dim());
    if (!disc.empty()) {
      if (source) {
        BalayageOptions options;
        options.tol = tol;
        options.probes = PointMatrix(disc.dim(), 0);
        nu = balayage(params, *source, disc, options).swept;
      } else {
        nu = equilibrium(params, disc, tol).measure;
      }
    }
    probe_potentials.push_back(probes.cols() ? potential(params, nu, probes) : Vector());
    solutions.push_back(std::move(nu));
  }
  ExhaustionTable table;
  const DiscreteMeasure& last = solutions.back();
  for (std::size_t k = 0; k < solutions.size(); ++k) {
    ExhaustionRow row;
    row.step = static_cast<int>(k);
    row.nodes = nested[k].size();
    row.mass = solutions[k].total_mass();
    row.strong_distance = strong_distance(params, solutions[k], last);
    if (probes.cols()) {
      row.max_potential_gap = (probe_potentials.back() - probe_potentials[k]).cwiseAbs().maxCoeff();
    }
    row.potential_increment = std::numeric_limits<double>::infinity();
    if (k > 0) {
      if (probes.cols()) {
        row.potential_increment = (probe_potentials[k] - probe_potentials[k - 1]).minCoeff();
        if (row.potential_increment < -1e-9) table.potentials_nondecreasing = false;
      }
      const auto& prev = table.rows.back();
      if (row.mass < prev.mass) table.masses_nondecreasing = false;
      if (row.strong_distance > prev.strong_distance + 1e-9) table.distances_nonincreasing = false;
    }
    table.rows.push_back(row);
  }
  return table;
}

AdditivityReport additivity_check(const KernelParams& params, const std::vector<DiscreteMeasure>& parts,
                                  const Discretization& disc, double tol) {
  AdditivityReport report;
  if (disc.empty() || parts.empty()) return report;
  const Matrix gram = kernel_matrix(params, disc);
  BalayageOptions options;
  options.tol = tol;
  options.probes = PointMatrix(disc.dim(), 0);
  DiscreteMeasure sum = DiscreteMeasure::empty(disc.dim());
  Vector summed = Vector::Zero(disc.size());
  for (const auto& part : parts) {
    sum = sum + part;
    const BalayageResult swept = balayage(params, part, disc, gram, options);
    summed += swept.swept.weights;
    if (part.total_mass() > 0.0) report.all_interior = report.all_interior && interior_solution(swept.swept.weights);
    bool on_nodes = true;
    for (Eigen::Index j = 0; j < part.size() && on_nodes; ++j) {
      on_nodes = find_node(disc, part.points.col(j), -1) >= 0;
    }
    if (on_nodes) {
      report.passthrough_deviation = std::max(
          report.passthrough_deviation,
          (swept.swept.weights - node_weights(part, disc)).cwiseAbs().maxCoeff());
    }
  }
  const BalayageResult whole = balayage(params, sum, disc, gram, options);
  if (sum.total_mass() > 0.0) report.all_interior = report.all_interior && interior_solution(whole.swept.weights);
  report.max_deviation = (whole.swept.weights - summed).cwiseAbs().maxCoeff();
  return report;
}

}  // namespace riesz
