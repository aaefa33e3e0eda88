#include "riesz/thinness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace riesz {

namespace {

// Least-squares slope of ys against xs.
double fitted_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) return 0.0;
  return (m * sxy - sx * sy) / denom;
}

std::size_t tail_length(std::size_t count) { return std::max<std::size_t>(3, count / 3); }

// Whether any sample point of the piece's bounding box lies in the piece.
bool piece_has_volume(const ShellPiece& piece) {
  const ShapeSpec self{piece};
  BoundingBox box;
  try {
    box = bounding_box(self);
  } catch (const DomainError&) {
    return true;
  }
  const int n = static_cast<int>(box.lo.size());
  Point x(n);
  for (std::uint64_t k = 1; k <= 4096; ++k) {
    for (int d = 0; d < n; ++d) x[d] = box.lo[d] + (box.hi[d] - box.lo[d]) * halton(k, nth_prime(d));
    if (contains(self, x)) return true;
  }
  return false;
}

struct TailFit {
  double slope = 0.0;
  bool all_zero = false;
  bool mixed_zero = false;
  bool unreliable = false;
  double min_value = 0.0;
};

TailFit fit_tail(const std::vector<ShellCapacity>& caps, const std::vector<double>& values) {
  TailFit fit;
  const std::size_t tail = tail_length(values.size());
  const std::size_t start = values.size() - tail;
  std::vector<double> xs, ys;
  std::size_t zeros = 0;
  fit.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = start; i < values.size(); ++i) {
    if (!caps[i].reliable) fit.unreliable = true;
    fit.min_value = std::min(fit.min_value, values[i]);
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      ++zeros;
      continue;
    }
    xs.push_back(caps[i].k);
    ys.push_back(std::log(values[i]));
  }
  fit.all_zero = zeros == tail;
  fit.mixed_zero = zeros > 0 && zeros < tail;
  if (xs.size() >= 2) fit.slope = fitted_slope(xs, ys);
  return fit;
}

}  // namespace

std::string to_string(ThinnessVerdict verdict) {
  switch (verdict) {
    case ThinnessVerdict::not_thin: return "not_thin";
    case ThinnessVerdict::thin_not_ultrathin: return "thin_not_ultrathin";
    case ThinnessVerdict::ultrathin: return "ultrathin";
    case ThinnessVerdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(RegularityClass verdict) {
  switch (verdict) {
    case RegularityClass::regular: return "regular";
    case RegularityClass::irregular: return "irregular";
    case RegularityClass::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double default_delta(double q) { return 0.25 * std::abs(std::log(q)); }

std::vector<ShellCapacity> shell_capacities(const KernelParams& params, const ShapeSpec& shape,
                                            const Point& y, double q, int k_lo, int k_hi,
                                            ShellDirection direction, int resolution, double tol) {
  params.validate();
  validate(shape);
  if (resolution < 1) throw ParameterError("shell resolution must be positive");
  const ShellDecomposition shells = shell_decompose(shape, y, q, k_lo, k_hi, direction);
  std::vector<ShellCapacity> out;
  for (std::size_t i = 0; i < shells.pieces.size(); ++i) {
    ShellCapacity entry;
    entry.k = k_lo + static_cast<int>(i);
    const Discretization disc = discretize(shells.pieces[i], resolution);
    entry.nodes = disc.size();
    if (disc.empty()) {
      const auto& piece = std::get<ShellPiece>(shells.pieces[i].shape);
      if (piece_has_volume(piece)) {
        entry.reliable = false;
        entry.warning = "shell " + std::to_string(entry.k) + " meets the shape but received no nodes";
      }
    } else {
      entry.capacity = equilibrium(params, disc, tol).capacity_mass;
    }
    out.push_back(entry);
  }
  return out;
}

ThinnessReport classify_thinness(const std::vector<ShellCapacity>& shell_caps, const KernelParams& params,
                                 double q, std::optional<double> delta) {
  params.validate();
  if (shell_caps.size() < 6) throw ParameterError("thinness classification needs at least 6 shells");
  if (!(q > 1.0)) throw ParameterError("thinness classification requires q > 1");
  ThinnessReport report;
  report.shell_caps = shell_caps;
  report.q = q;
  report.delta = delta.value_or(default_delta(q));
  report.k_lo = shell_caps.front().k;
  report.k_hi = shell_caps.back().k;
  const double gap = params.n - params.alpha;
  std::vector<double> caps;
  double sum = 0.0, cap_sum = 0.0;
  for (const auto& shell : shell_caps) {
    const double term = shell.capacity / std::pow(q, shell.k * gap);
    report.terms.push_back(term);
    sum += term;
    cap_sum += shell.capacity;
    report.partial_sums.push_back(sum);
    report.capacity_partial_sums.push_back(cap_sum);
    caps.push_back(shell.capacity);
  }
  const TailFit term_fit = fit_tail(shell_caps, report.terms);
  const TailFit cap_fit = fit_tail(shell_caps, caps);
  report.tail_slope = term_fit.slope;
  report.capacity_slope = cap_fit.slope;
  if (term_fit.unreliable || term_fit.mixed_zero) {
    report.verdict = ThinnessVerdict::inconclusive;
    return report;
  }
  if (term_fit.all_zero) {
    report.thin_criterion = report.ultrathin_criterion = true;
    report.verdict = ThinnessVerdict::ultrathin;
    return report;
  }
  report.thin_criterion = term_fit.slope < -report.delta && std::isfinite(sum);
  report.ultrathin_criterion = report.thin_criterion && cap_fit.slope < -report.delta;
  if (report.ultrathin_criterion) {
    report.verdict = ThinnessVerdict::ultrathin;
  } else if (report.thin_criterion) {
    report.verdict = ThinnessVerdict::thin_not_ultrathin;
  } else if (term_fit.min_value > 0.0) {
    report.verdict = ThinnessVerdict::not_thin;
  }
  return report;
}

RegularityVerdict wiener_regularity(const KernelParams& params, const ShapeSpec& shape, const Point& y,
                                    double q, int k_lo, int k_hi, int resolution,
                                    std::optional<double> delta, double tol) {
  if (!(q > 0.0 && q < 1.0)) throw ParameterError("Wiener series requires 0 < q < 1");
  RegularityVerdict out;
  out.y = y;
  out.shell_caps =
      shell_capacities(params, shape, y, q, k_lo, k_hi, ShellDirection::inner, resolution, tol);
  if (out.shell_caps.size() < 6) throw ParameterError("Wiener series needs at least 6 shells");
  const double gap = params.n - params.alpha;
  for (const auto& shell : out.shell_caps) {
    const double term = shell.capacity / std::pow(q, shell.k * gap);
    out.series_terms.push_back(term);
    out.partial_sum += term;
  }
  const TailFit fit = fit_tail(out.shell_caps, out.series_terms);
  out.tail_slope = fit.slope;
  const double threshold = delta.value_or(default_delta(q));
  if (fit.unreliable || fit.mixed_zero) {
    out.verdict = RegularityClass::inconclusive;
  } else if (fit.all_zero || fit.slope < -threshold) {
    out.verdict = RegularityClass::irregular;
  } else if (fit.min_value > 0.0) {
    out.verdict = RegularityClass::regular;
  }
  return out;
}

InversionComparison thinness_via_inversion(const KernelParams& params, const ShapeSpec& shape,
                                           const Point& y, const InversionOptions& options) {
  validate(shape);
  if (contains(shape, y)) throw DomainError("inversion center lies in the shape");
  InversionComparison out;
  const auto caps = shell_capacities(params, shape, y, options.q, options.k_lo, options.k_hi,
                                     ShellDirection::outer, options.resolution, options.tol);
  out.direct = classify_thinness(caps, params, options.q, options.delta);

  const ShapeSpec image{Inverted{std::make_shared<const ShapeSpec>(shape), y}};
  out.inverted = wiener_regularity(params, image, y, 1.0 / options.q, options.k_lo, options.k_hi,
                                   options.resolution, options.delta, options.tol);

  const bool thin = out.direct.verdict == ThinnessVerdict::ultrathin ||
                    out.direct.verdict == ThinnessVerdict::thin_not_ultrathin;
  out.inconclusive = out.direct.verdict == ThinnessVerdict::inconclusive ||
                     out.inverted.verdict == RegularityClass::inconclusive;
  out.agree = !out.inconclusive && (thin == (out.inverted.verdict == RegularityClass::irregular));

  const double gap = params.n - params.alpha;
  out.transfer_holds = true;
  for (std::size_t i = 0; i < caps.size(); ++i) {
    TransferBound bound;
    bound.k = caps[i].k;
    bound.capacity = caps[i].capacity;
    bound.inverted_capacity = out.inverted.shell_caps[i].capacity;
    bound.lower = std::pow(options.q, -(2.0 * bound.k + 2.0) * gap) * bound.capacity;
    bound.upper = std::pow(options.q, -2.0 * bound.k * gap) * bound.capacity;
    bound.holds = bound.inverted_capacity >= (1.0 - options.transfer_slack) * bound.lower &&
                  bound.inverted_capacity <= (1.0 + options.transfer_slack) * bound.upper;
    out.transfer_holds = out.transfer_holds && bound.holds;
    out.transfer.push_back(bound);
  }

  // Kelvin cross-check on the compact piece of the first few shells.
  const ShellPiece piece{std::make_shared<const ShapeSpec>(shape), y, std::pow(options.q, options.k_lo),
                         std::pow(options.q, options.k_lo + options.kelvin_shells),
                         ShellDirection::outer};
  const Discretization compact = discretize(ShapeSpec{piece}, options.kelvin_resolution);
  out.kelvin_nodes = compact.size();
  if (compact.empty()) {
    out.inconclusive = true;
    return out;
  }
  const Discretization image_disc = invert_discretization(compact, y);
  if (image_disc.size() != compact.size()) {
    out.inconclusive = true;
    return out;
  }
  const EquilibriumResult eq = equilibrium(params, compact, options.tol);
  const DiscreteMeasure transformed = kelvin_transform(params, y, eq.measure);
  BalayageOptions sweep_options;
  sweep_options.tol = options.tol;
  sweep_options.probes = PointMatrix(compact.dim(), 0);
  const BalayageResult swept = harmonic_measure(params, y, image_disc, sweep_options);
  const double scale = transformed.weights.cwiseAbs().maxCoeff();
  out.kelvin_deviation =
      scale > 0.0 ? (swept.swept.weights - transformed.weights).cwiseAbs().maxCoeff() / scale : 0.0;
  out.kelvin_interior = interior_solution(eq.measure.weights);
  return out;
}

SubadditivityGap subadditivity_gap(const KernelParams& params, const Discretization& a,
                                   const Discretization& b, double tol) {
  params.validate();
  SubadditivityGap out;
  out.distance = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      out.distance = std::min(out.distance, (a.nodes.col(i) - b.nodes.col(j)).norm());
    }
  }
  if (!(out.distance > 1e-14)) throw ParameterError("subadditivity_gap: node sets overlap");
  out.capacity_a = equilibrium(params, a, tol).capacity_mass;
  out.capacity_b = equilibrium(params, b, tol).capacity_mass;
  const Discretization joint = a.empty() ? b : (b.empty() ? a : concatenate(a, b));
  out.capacity_union = equilibrium(params, joint, tol).capacity_mass;
  out.lhs = out.capacity_a + out.capacity_b;
  const double coupling = std::isfinite(out.distance)
                              ? std::max(out.capacity_a, out.capacity_b) /
                                    std::pow(out.distance, params.n - params.alpha)
                              : 0.0;
  out.rhs = out.capacity_union * (1.0 + coupling);
  out.margin = out.rhs - out.lhs;
  out.plain_margin = out.lhs - out.capacity_union;
  return out;
}

ShapeSpec rotation_body(int family, double s, double x1_lo, double x1_hi) {
  if (!(x1_lo >= 0.0 && x1_lo < x1_hi)) throw ParameterError("rotation body requires 0 <= x1_lo < x1_hi");
  ShapeSpec shape{RotationBody{family, s, x1_lo, x1_hi, 3}};
  validate(shape);
  return shape;
}

}  // namespace riesz
