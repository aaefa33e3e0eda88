#include "riesz/kernel.hpp"

#include <algorithm>
#include <array>
#include <numbers>
#include <string>

namespace riesz {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCoincident = 1e-14;


// \int_0^U (1 + u^2)^(beta/2) du for beta < -1, U = exp(log_upper).
double slender_integral(double beta, double log_upper) {
  const double tail_exponent = beta + 1.0;  // < 0
  const double full = 0.5 * std::sqrt(kPi) * std::tgamma(-0.5 * tail_exponent) /
                      std::tgamma(-0.5 * beta);
  if (log_upper > 12.0) {
    return full - std::exp(tail_exponent * log_upper) / (-tail_exponent);
  }
  auto integrand_u = [beta](double u) { return std::pow(1.0 + u * u, 0.5 * beta); };
  auto simpson = [](auto&& f, double a, double b, int intervals) {
    const double h = (b - a) / intervals;
    double sum = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
  };
  const double upper = std::exp(log_upper);
  if (upper <= 1.0) return simpson(integrand_u, 0.0, upper, 400);
  double value = simpson(integrand_u, 0.0, 1.0, 400);
  // u = e^t on [1, U].
  value += simpson([&](double t) { return integrand_u(std::exp(t)) * std::exp(t); }, 0.0, log_upper,
                   800);
  return value;
}

const std::vector<Point>& sphere_directions() {
  static const std::vector<Point> dirs = [] {
    constexpr int kCount = 1024;
    std::vector<Point> out;
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < kCount; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / kCount;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Point u(3);
      u << r * std::cos(golden * i), r * std::sin(golden * i), z;
      out.push_back(u);
    }
    return out;
  }();
  return dirs;
}

// Intersection [t1, t2] of the ray s + t u (t >= 0) with the ball |x - c| <= r.
bool ray_ball(const Point& offset, const Point& u, double r, double& t1, double& t2) {
  const double bcoef = u.dot(offset);
  const double c = offset.squaredNorm() - r * r;
  const double disc = bcoef * bcoef - c;
  if (disc <= 0.0) return false;
  const double root = std::sqrt(disc);
  t1 = std::max(0.0, -bcoef - root);
  t2 = -bcoef + root;
  return t2 > t1;
}

double ball_average(const KernelParams& params, const Point& node, double r, const Point& source) {
  const double d = (source - node).norm();
  if (params.newtonian()) {
    if (d >= r) return 1.0 / d;
    return (3.0 * r * r - d * d) / (2.0 * r * r * r);
  }
  if (params.n != 3) return riesz_kernel(params, d);
  const auto& dirs = sphere_directions();
  const Point offset = source - node;
  double sum = 0.0;
  for (const auto& u : dirs) {
    double t1 = 0.0;
    double t2 = 0.0;
    if (!ray_ball(offset, u, r, t1, t2)) continue;
    sum += (std::pow(t2, params.alpha) - std::pow(t1, params.alpha)) / params.alpha;
  }
  const double solid = 4.0 * kPi / dirs.size();
  return sum * solid / (4.0 / 3.0 * kPi * r * r * r);
}

double disk_average(const KernelParams& params, const Point& node, double r, const Point& normal,
                    const Point& source) {
  if (params.n != 3 || normal.norm() == 0.0) return riesz_kernel(params, (source - node).norm());
  const Point nu = normal.normalized();
  const Point rel = source - node;
  const double height = rel.dot(nu);
  const Point e = rel - height * nu;  // foot of the source relative to the panel center
  Point helper = Point::Zero(3);
  Eigen::Index smallest = 0;
  nu.cwiseAbs().minCoeff(&smallest);
  helper[smallest] = 1.0;
  const Eigen::Vector3d nu3 = nu;
  const Eigen::Vector3d b1 = nu3.cross(Eigen::Vector3d(helper)).normalized();
  const Eigen::Vector3d b2 = nu3.cross(b1);
  const double beta = params.exponent();
  const double h2 = height * height;
  auto radial = [&](double t) {
    if (beta == -2.0) return 0.5 * std::log(t * t + h2);
    return std::pow(t * t + h2, 0.5 * (beta + 2.0)) / (beta + 2.0);
  };
  constexpr int kAngles = 256;
  double sum = 0.0;
  for (int k = 0; k < kAngles; ++k) {
    const double theta = 2.0 * kPi * (k + 0.5) / kAngles;
    const Point u = std::cos(theta) * Point(b1) + std::sin(theta) * Point(b2);
    double t1 = 0.0;
    double t2 = 0.0;
    if (!ray_ball(e, u, r, t1, t2)) continue;
    sum += radial(t2) - radial(t1);
  }
  return sum * (2.0 * kPi / kAngles) / (kPi * r * r);
}

void check_same_dim(int a, int b, const char* what) {
  if (a != b) throw ParameterError(std::string(what) + ": dimension mismatch");
}

}  // namespace

void KernelParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ParameterError("alpha must lie in (0, 2]");
  if (n < 3) throw ParameterError("n must be >= 3");
  if (!(alpha < n)) throw ParameterError("alpha must be < n");
}

Vector DiscreteMeasure::effective_radii() const {
  Vector r(size());
  for (Eigen::Index i = 0; i < size(); ++i) r[i] = cells[i].radius();
  return r;
}

void DiscreteMeasure::validate() const {
  if (weights.size() != points.cols() || static_cast<Eigen::Index>(cells.size()) != points.cols()) {
    throw ParameterError("measure arrays must have equal length");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw ParameterError("measure weights must be finite and nonnegative");
  }
  if (!points.allFinite()) throw ParameterError("measure atoms must be finite");
}

DiscreteMeasure DiscreteMeasure::empty(int n) { return {PointMatrix(n, 0), Vector(0), {}}; }

DiscreteMeasure DiscreteMeasure::dirac(const Point& p, double weight, double cell_radius) {
  DiscreteMeasure mu{p, Vector::Constant(1, weight), {Cell::volume_cell(cell_radius)}};
  mu.validate();
  return mu;
}

DiscreteMeasure DiscreteMeasure::on_nodes(const Discretization& disc, const Vector& weights) {
  DiscreteMeasure mu{disc.nodes, weights, disc.cells};
  mu.validate();
  return mu;
}

DiscreteMeasure operator+(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  check_same_dim(a.dim(), b.dim(), "measure sum");
  DiscreteMeasure out;
  out.points.resize(a.dim(), a.size() + b.size());
  out.points << a.points, b.points;
  out.weights.resize(a.size() + b.size());
  out.weights << a.weights, b.weights;
  out.cells = a.cells;
  out.cells.insert(out.cells.end(), b.cells.begin(), b.cells.end());
  return out;
}

DiscreteMeasure operator*(double factor, const DiscreteMeasure& mu) {
  DiscreteMeasure out = mu;
  out.weights *= factor;
  return out;
}

double self_kernel(const KernelParams& params, const Cell& cell) {
  const double beta = params.exponent();
  switch (cell.kind) {
    case CellKind::volume:
      return params.n / params.alpha * std::exp(beta * cell.log_radius);
    case CellKind::panel:
      if (params.n != 3 || !(params.alpha > 1.0)) {
        throw ParameterError("panel self-energy needs n = 3 and alpha > 1");
      }
      return 2.0 / (beta + 2.0) * std::exp(beta * cell.log_radius);
    case CellKind::bead: {
      const double log_upper = std::log(0.5 * cell.length) - cell.log_radius;
      if (beta == -1.0) {
        const double asinh_u = log_upper > 20.0 ? log_upper + std::log(2.0)
                                                : std::asinh(std::exp(log_upper));
        return 2.0 / cell.length * asinh_u;
      }
      const double integral = slender_integral(beta, log_upper);
      return std::exp(std::log(2.0 / cell.length) + (beta + 1.0) * cell.log_radius) * integral;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double cell_average_kernel(const KernelParams& params, const Point& node, const Cell& cell,
                           const Point& axis, const Point& source) {
  switch (cell.kind) {
    case CellKind::volume:
      return ball_average(params, node, cell.radius(), source);
    case CellKind::panel:
      return disk_average(params, node, cell.radius(), axis, source);
    case CellKind::bead:
      break;
  }
  return riesz_kernel(params, (source - node).norm());
}

double potential(const KernelParams& params, const DiscreteMeasure& mu, const Point& x) {
  check_same_dim(mu.dim(), static_cast<int>(x.size()), "potential");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (mu.weights[i] == 0.0) continue;
    const double d = (mu.points.col(i) - x).norm();
    sum += mu.weights[i] * (d < kCoincident ? self_kernel(params, mu.cells[i]) : riesz_kernel(params, d));
  }
  return sum;
}

Vector potential(const KernelParams& params, const DiscreteMeasure& mu, const PointMatrix& points) {
  Vector out(points.cols());
  parallel_for(points.cols(), [&](std::size_t k) {
    out[k] = potential(params, mu, Point(points.col(k)));
  });
  return out;
}

Vector cell_potentials(const KernelParams& params, const DiscreteMeasure& mu,
                       const Discretization& disc) {
  check_same_dim(mu.dim(), disc.dim(), "cell_potentials");
  Vector b = Vector::Zero(disc.size());
  // Atoms sitting on a node interact with the other nodes exactly as the
  // kernel matrix does, so a measure on the nodes is its own sweep.
  std::vector<char> on_node(mu.size(), 0);
  parallel_for(mu.size(), [&](std::size_t j) {
    for (Eigen::Index i = 0; i < disc.size() && !on_node[j]; ++i) {
      on_node[j] = (disc.nodes.col(i) - mu.points.col(j)).norm() < kCoincident;
    }
  });
  parallel_for(disc.size(), [&](std::size_t i) {
    const Point node = disc.nodes.col(i);
    const Cell& cell = disc.cells[i];
    const double near = cell.kind == CellKind::bead ? 0.0 : 2.0 * cell.radius();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      if (mu.weights[j] == 0.0) continue;
      const Point atom = mu.points.col(j);
      const double d = (atom - node).norm();
      double value = 0.0;
      if (d < kCoincident) {
        value = self_kernel(params, cell);
      } else if (d < near && !on_node[j]) {
        value = cell_average_kernel(params, node, cell, disc.axes.col(i), atom);
      } else {
        value = riesz_kernel(params, d);
      }
      sum += mu.weights[j] * value;
    }
    b[i] = sum;
  });
  return b;
}

Matrix kernel_matrix(const KernelParams& params, const Discretization& disc) {
  params.validate();
  const Eigen::Index count = disc.size();
  if (count == 0) throw ParameterError("kernel_matrix: empty discretization");
  Matrix m(count, count);
  std::vector<char> duplicate(count, 0);
  parallel_for(count, [&](std::size_t i) {
    const auto xi = disc.nodes.col(i);
    for (Eigen::Index j = 0; j < count; ++j) {
      if (static_cast<Eigen::Index>(i) == j) {
        m(i, j) = self_kernel(params, disc.cells[i]);
        continue;
      }
      const double d = (xi - disc.nodes.col(j)).norm();
      if (d < kCoincident) duplicate[i] = 1;
      m(i, j) = riesz_kernel(params, d);
    }
  });
  for (Eigen::Index i = 0; i < count; ++i) {
    if (duplicate[i]) {
      throw AssemblyError("kernel_matrix: duplicate nodes at index " + std::to_string(i));
    }
    if (!std::isfinite(m(i, i)) || !(m(i, i) > 0.0)) {
      throw AssemblyError("kernel_matrix: self-energy of cell " + std::to_string(i) +
                          " is not representable");
    }
  }
  return m;
}

namespace {

// sum_i a_i sum_j b_j k(p_i, q_j); coincident atoms use the mean of the two
// cell self-values so the pairing is symmetric.
double ordered_energy(const KernelParams& params, const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::vector<double> rows(a.size(), 0.0);
  parallel_for(a.size(), [&](std::size_t i) {
    if (a.weights[i] == 0.0) return;
    const auto pi = a.points.col(i);
    double row = 0.0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      if (b.weights[j] == 0.0) continue;
      const double d = (pi - b.points.col(j)).norm();
      const double value =
          d < kCoincident ? 0.5 * (self_kernel(params, a.cells[i]) + self_kernel(params, b.cells[j]))
                          : riesz_kernel(params, d);
      row += b.weights[j] * value;
    }
    rows[i] = a.weights[i] * row;
  });
  double sum = 0.0;
  for (double r : rows) sum += r;
  return sum;
}

}  // namespace

double mutual_energy(const KernelParams& params, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  check_same_dim(mu.dim(), nu.dim(), "mutual_energy");
  if (&mu == &nu) return ordered_energy(params, mu, mu);
  // Both orders, so that swapping the arguments gives the same bits.
  return 0.5 * (ordered_energy(params, mu, nu) + ordered_energy(params, nu, mu));
}

DiscreteMeasure kelvin_transform(const KernelParams& params, const Point& y, const DiscreteMeasure& nu) {
  check_same_dim(nu.dim(), static_cast<int>(y.size()), "kelvin_transform");
  DiscreteMeasure out = nu;
  const double beta = params.exponent();
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    const Point rel = nu.points.col(i) - y;
    const double d = rel.norm();
    if (d < kCoincident) throw DomainError("kelvin_transform: atom at the inversion center");
    out.points.col(i) = y + rel / (d * d);
    out.weights[i] = nu.weights[i] * std::pow(d, beta);
    out.cells[i].log_radius -= 2.0 * std::log(d);
    out.cells[i].length /= d * d;
  }
  return out;
}

}  // namespace riesz
