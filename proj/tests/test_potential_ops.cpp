#include "riesz/potential_ops.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace riesz;

namespace {

Point p3(double a, double b, double c) {
  Point p(3);
  p << a, b, c;
  return p;
}

const KernelParams kNewton{2.0, 3};

const Discretization& unit_sphere_500() {
  static const Discretization disc = discretize(Sphere{Point::Zero(3), 1.0}, 500);
  return disc;
}

Discretization scaled(const Discretization& disc, double lambda) {
  Discretization out = disc;
  out.nodes *= lambda;
  for (auto& c : out.cells) c.log_radius += std::log(lambda);
  out.cell_measures *= std::pow(lambda, disc.dim());
  out.parent = nullptr;
  return out;
}

}  // namespace

TEST_CASE("equilibrium of the empty set") {
  const EquilibriumResult eq = equilibrium(kNewton, empty_discretization(3));
  CHECK(eq.capacity_mass == 0.0);
  CHECK(eq.measure.size() == 0);
}

TEST_CASE("unit sphere capacity") {
  const Discretization& disc = unit_sphere_500();
  const EquilibriumResult eq = equilibrium(kNewton, disc);
  // classical value: uniform unit charge has potential 1 on the ball
  CHECK(eq.capacity_mass == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(eq.capacity_mass - eq.capacity_energy) <= 1e-6 * eq.capacity_mass);
  CHECK(eq.kkt.stationarity <= eq.kkt.tolerance);
  // exterior potential of the sphere is c / |x|
  CHECK(potential(kNewton, eq.measure, p3(3, 0, 0)) == doctest::Approx(1.0 / 3.0).epsilon(0.01));

  const Matrix m = kernel_matrix(kNewton, disc);
  const Vector node_potential = m * eq.measure.weights;
  CHECK(node_potential.maxCoeff() <= 1.0 + 1e-9);
  for (Eigen::Index i = 0; i < disc.size(); ++i) {
    if (eq.measure.weights[i] > 0) CHECK(std::abs(node_potential[i] - 1.0) <= 1e-9);
  }

  const PointMatrix probes = probe_points(disc, 200, 0);
  const Vector off_set = potential(kNewton, eq.measure, probes);
  CHECK(off_set.maxCoeff() < 1.0);
}

TEST_CASE("capacity scales as lambda^(n - alpha)") {
  SUBCASE("sphere of radius 2") {
    const EquilibriumResult eq = equilibrium(kNewton, discretize(Sphere{Point::Zero(3), 2.0}, 500));
    CHECK(eq.capacity_mass == doctest::Approx(2.0).epsilon(0.02));
  }
  SUBCASE("exact under node scaling") {
    for (double alpha : {2.0, 1.5, 0.8}) {
      const KernelParams params{alpha, 3};
      const Discretization disc = discretize(Ball{p3(0.2, 0, 0), 1.0}, 300);
      const double lambda = 2.5;
      const double c1 = equilibrium(params, disc).capacity_mass;
      const double c2 = equilibrium(params, scaled(disc, lambda)).capacity_mass;
      CHECK(c2 == doctest::Approx(std::pow(lambda, 3.0 - alpha) * c1).epsilon(1e-10));

      const Point y = p3(2.0, 0.5, 0.0);
      const double m1 = harmonic_measure(params, y, disc).swept_mass;
      const double m2 = harmonic_measure(params, Point(lambda * y), scaled(disc, lambda)).swept_mass;
      CHECK(m2 == doctest::Approx(m1).epsilon(1e-10));
    }
  }
}

TEST_CASE("capacity is monotone under inclusion") {
  for (double alpha : {2.0, 1.3}) {
    const KernelParams params{alpha, 3};
    const Discretization disc = discretize(Box{p3(0, 0, 0), p3(2, 1, 1)}, 400);
    double previous = 0.0;
    for (double cut : {0.3, 0.7, 1.1, 1.5, 2.1}) {
      std::vector<bool> mask(disc.size());
      for (Eigen::Index i = 0; i < disc.size(); ++i) mask[i] = disc.nodes(0, i) < cut;
      const double c = equilibrium(params, restrict_nodes(disc, mask)).capacity_mass;
      CHECK(c >= previous);
      previous = c;
    }
  }
}

TEST_CASE("balayage onto the unit sphere") {
  const Discretization& disc = unit_sphere_500();

  SUBCASE("an exterior Dirac sweeps to mass 1/|y|") {
    const BalayageResult b = harmonic_measure(kNewton, p3(2, 0, 0), disc);
    CHECK(b.swept_mass == doctest::Approx(0.5).epsilon(0.02));
    CHECK(b.swept_mass <= b.source_mass + 1e-9);
    CHECK(b.contraction_margin >= -1e-9);
    CHECK(b.potential_gap_on_A <= b.kkt.tolerance);
    const Point barycenter = b.swept.points * b.swept.weights / b.swept_mass;
    CHECK(barycenter[0] > 0.0);
    CHECK(std::abs(barycenter[1]) < 1e-2);
    CHECK(std::abs(barycenter[2]) < 1e-2);

    const BalayageResult far = harmonic_measure(kNewton, p3(100, 0, 0), disc);
    CHECK(std::abs(far.swept_mass - 0.01) < 0.001);
  }

  SUBCASE("a Dirac at a node is its own sweep") {
    const Point node = disc.nodes.col(42);
    const BalayageResult b = harmonic_measure(kNewton, node, disc);
    CHECK(b.swept_mass == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(b.swept.weights[42] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(b.swept.weights.sum() - b.swept.weights[42] < 1e-9);
  }

  SUBCASE("sweeping is homogeneous") {
    const Point y = p3(0.3, 1.8, -0.4);
    const BalayageResult one = balayage(kNewton, DiscreteMeasure::dirac(y), disc);
    const BalayageResult two = balayage(kNewton, DiscreteMeasure::dirac(y, 2.0), disc);
    CHECK((two.swept.weights - 2.0 * one.swept.weights).cwiseAbs().maxCoeff() <=
          1e-12 * two.swept.weights.maxCoeff());
  }

  SUBCASE("interior sources keep their full mass") {
    // the sphere separates the source from infinity, so outside it the two
    // potentials agree
    const Point y = p3(0.1, 0, 0);
    const BalayageResult b = harmonic_measure(kNewton, y, disc);
    CHECK(b.swept_mass == doctest::Approx(1.0).epsilon(0.02));
    const PointMatrix probes = probe_points(disc, 100, 2);
    const Vector source = potential(kNewton, DiscreteMeasure::dirac(y), probes);
    const Vector swept = potential(kNewton, b.swept, probes);
    CHECK(((swept - source).array() / source.array()).abs().maxCoeff() < 0.02);
  }

  SUBCASE("empty target") {
    const BalayageResult b = harmonic_measure(kNewton, p3(2, 0, 0), empty_discretization(3));
    CHECK(b.swept_mass == 0.0);
    CHECK(b.source_mass == 1.0);
  }
}

TEST_CASE("total mass identity") {
  const Discretization& disc = unit_sphere_500();
  SUBCASE("exterior point") {
    const HarmonicMassIdentity id = harmonic_mass_identity(kNewton, p3(2, 0, 0), disc);
    CHECK(id.gap < 1e-8);
    CHECK(id.mass == doctest::Approx(0.5).epsilon(0.02));
    CHECK(id.eq_potential_at_y == doctest::Approx(0.5).epsilon(0.02));
  }
  SUBCASE("a node") {
    const HarmonicMassIdentity id = harmonic_mass_identity(kNewton, disc.nodes.col(3), disc);
    CHECK(id.mass == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(id.eq_potential_at_y - 1.0) <= 1e-9);
  }
  SUBCASE("two balls") {
    for (double alpha : {2.0, 1.5}) {
      const KernelParams params{alpha, 3};
      const Discretization two = discretize(Union{{Ball{p3(-2, 0, 0), 1.0}, Ball{p3(2, 0, 0), 1.0}}}, 600);
      const HarmonicMassIdentity id = harmonic_mass_identity(params, p3(10, 0, 0), two);
      CHECK(id.gap < 1e-6);
      CHECK(id.mass < 1.0);
      // recompute the right-hand side from the equilibrium weights
      const Vector b = cell_potentials(params, DiscreteMeasure::dirac(p3(10, 0, 0)), two);
      CHECK(id.equilibrium.measure.weights.dot(b) == doctest::Approx(id.eq_potential_at_y).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(harmonic_mass_identity(kNewton, p3(2, 0, 0), empty_discretization(3)), ParameterError);
}

TEST_CASE("support profiles") {
  const Discretization ball = discretize(Ball{Point::Zero(3), 1.0}, 2000);
  SUBCASE("newtonian sweeps live on the boundary") {
    const BalayageResult b = harmonic_measure(kNewton, p3(2, 0, 0), ball);
    const SupportProfile p = support_profile(kNewton, b.swept, ball);
    CHECK_FALSE(p.empty);
    CHECK(p.boundary_mass_fraction >= 0.99);
    CHECK(p.interior_mass_fraction >= 0.0);
    CHECK(std::abs(p.boundary_mass_fraction + p.interior_mass_fraction - 1.0) < 1e-12);
  }
  SUBCASE("alpha < 2 sweeps reach the interior") {
    const KernelParams params{1.5, 3};
    const BalayageResult b = harmonic_measure(params, p3(2, 0, 0), ball);
    const SupportProfile p = support_profile(params, b.swept, ball);
    CHECK(p.interior_mass_fraction >= 0.10);
    CHECK(p.boundary_mass_fraction >= 0.0);
    CHECK(std::abs(p.boundary_mass_fraction + p.interior_mass_fraction - 1.0) < 1e-12);
  }
  SUBCASE("zero mass") {
    const DiscreteMeasure zero = DiscreteMeasure::on_nodes(ball, Vector::Zero(ball.size()));
    const SupportProfile p = support_profile(kNewton, zero, ball);
    CHECK(p.empty);
    CHECK(p.boundary_mass_fraction == 0.0);
    CHECK(p.interior_mass_fraction == 0.0);
  }
  SUBCASE("atoms off the nodes are rejected") {
    CHECK_THROWS_AS(support_profile(kNewton, DiscreteMeasure::dirac(p3(5, 5, 5)), ball), ParameterError);
  }
}

TEST_CASE("probe points") {
  const Discretization& disc = unit_sphere_500();
  const DiscreteMeasure source = DiscreteMeasure::dirac(p3(2, 0, 0), 1.0, 0.05);
  const PointMatrix a = probe_points(disc, 300, 4, &source);
  const PointMatrix b = probe_points(disc, 300, 4, &source);
  const PointMatrix c = probe_points(disc, 300, 5, &source);
  REQUIRE(a.cols() == 300);
  CHECK(a == b);
  CHECK(a != c);
  const Vector radii = disc.effective_radii();
  const Point lo = disc.nodes.rowwise().minCoeff();
  const Point hi = disc.nodes.rowwise().maxCoeff();
  const double half = 1.5 * (hi - lo).norm();
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const Point x = a.col(k);
    CHECK(x.norm() > 1.0);  // outside the filled sphere
    CHECK((x - 0.5 * (lo + hi)).cwiseAbs().maxCoeff() <= half);
    CHECK((x - p3(2, 0, 0)).norm() > 0.05);
    for (Eigen::Index i = 0; i < disc.size(); ++i) CHECK((x - disc.nodes.col(i)).norm() > radii[i]);
  }
  CHECK(probe_points(empty_discretization(3), 10, 0).cols() == 0);
}

TEST_CASE("exhaustion by nested caps") {
  const Discretization& disc = unit_sphere_500();
  std::vector<Discretization> nested;
  for (double h : {0.5, 0.0, -0.5, -0.9, -1.1}) {
    std::vector<bool> mask(disc.size());
    for (Eigen::Index i = 0; i < disc.size(); ++i) mask[i] = disc.nodes(2, i) >= h;
    nested.push_back(restrict_nodes(disc, mask));
  }
  const PointMatrix probes = probe_points(disc, 100, 1);

  SUBCASE("equilibrium") {
    const ExhaustionTable t = exhaustion_run(kNewton, nested, std::nullopt, probes);
    REQUIRE(t.rows.size() == nested.size());
    CHECK(t.masses_nondecreasing);
    CHECK(t.potentials_nondecreasing);
    CHECK(t.distances_nonincreasing);
    CHECK(t.rows.back().strong_distance == 0.0);
    CHECK(t.rows.back().mass == doctest::Approx(1.0).epsilon(0.02));
    for (std::size_t k = 1; k < t.rows.size(); ++k) {
      CHECK(t.rows[k].mass >= t.rows[k - 1].mass);
      CHECK(t.rows[k].potential_increment >= -1e-9);
    }
  }
  SUBCASE("balayage") {
    const ExhaustionTable t = exhaustion_run(kNewton, nested, DiscreteMeasure::dirac(p3(0, 0, 3)), probes);
    CHECK(t.masses_nondecreasing);
    CHECK(t.potentials_nondecreasing);
    CHECK(t.rows.back().mass <= 1.0 + 1e-9);
  }
  SUBCASE("a single step is at distance zero") {
    const ExhaustionTable t = exhaustion_run(kNewton, {disc}, std::nullopt, probes);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].strong_distance == 0.0);
  }
  SUBCASE("non-nested steps are rejected") {
    CHECK_THROWS_AS(exhaustion_run(kNewton, {nested[2], nested[1]}, std::nullopt, probes), ParameterError);
  }
}

TEST_CASE("additivity of sweeping") {
  const Discretization& disc = unit_sphere_500();
  SUBCASE("three exterior Diracs") {
    const std::vector<DiscreteMeasure> parts = {DiscreteMeasure::dirac(p3(2, 0, 0)),
                                                DiscreteMeasure::dirac(p3(0, -3, 0), 0.5),
                                                DiscreteMeasure::dirac(p3(1, 1, 1.5), 2.0)};
    const AdditivityReport r = additivity_check(kNewton, parts, disc);
    CHECK(r.all_interior);
    CHECK(r.max_deviation < 1e-8);
  }
  SUBCASE("a part on the nodes passes through") {
    const std::vector<DiscreteMeasure> parts = {DiscreteMeasure::dirac(p3(2, 0, 0)),
                                                DiscreteMeasure::dirac(disc.nodes.col(10), 0.7)};
    const AdditivityReport r = additivity_check(kNewton, parts, disc);
    CHECK(r.passthrough_deviation < 1e-9);
    CHECK(r.max_deviation < 1e-8);
  }
  SUBCASE("the zero measure sweeps to zero") {
    const BalayageResult b = balayage(kNewton, DiscreteMeasure::dirac(p3(2, 0, 0), 0.0), disc);
    CHECK(b.swept_mass == 0.0);
    const AdditivityReport r = additivity_check(kNewton, {DiscreteMeasure::dirac(p3(2, 0, 0), 0.0)}, disc);
    CHECK(r.max_deviation == 0.0);
  }
}

TEST_CASE("interior solution detection") {
  CHECK(interior_solution(Vector::Ones(3)));
  Vector w = Vector::Ones(3);
  w[1] = 1e-14;
  CHECK_FALSE(interior_solution(w));
  CHECK_FALSE(interior_solution(Vector(0)));
}

TEST_CASE("node weights") {
  const Discretization& disc = unit_sphere_500();
  const DiscreteMeasure mu = DiscreteMeasure::dirac(disc.nodes.col(5), 2.0) + DiscreteMeasure::dirac(disc.nodes.col(5), 1.0);
  const Vector w = node_weights(mu, disc);
  CHECK(w[5] == 3.0);
  CHECK(w.sum() == 3.0);
}
