#include "riesz/thinness.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace riesz;

namespace {

const KernelParams kNewton{2.0, 3};

Point p3(double x, double y, double z) {
  Point p(3);
  p << x, y, z;
  return p;
}

// Shells k = 1..count with c_k = scale * q^(rate k).
std::vector<ShellCapacity> geometric_caps(double q, double rate, int count = 12, double scale = 1.0) {
  std::vector<ShellCapacity> caps;
  for (int k = 1; k <= count; ++k) {
    ShellCapacity c;
    c.k = k;
    c.capacity = scale * std::pow(q, rate * k);
    c.nodes = 100;
    caps.push_back(c);
  }
  return caps;
}

}  // namespace

TEST_CASE("rotation body cross sections") {
  const ShapeSpec cylinder = rotation_body(1, 0.0, 0.0, 10.0);
  const auto& c = std::get<RotationBody>(cylinder.shape);
  for (double x1 : {0.5, 1.0, 7.0}) CHECK(rotation_radius(c, x1) == doctest::Approx(1.0));
  CHECK(contains(cylinder, p3(5.0, 0.99, 0.0)));
  CHECK_FALSE(contains(cylinder, p3(5.0, 1.01, 0.0)));
  const auto f2 = std::get<RotationBody>(rotation_body(2, 1.0, 0.0, 10.0).shape);
  CHECK(rotation_radius(f2, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  const auto f3 = std::get<RotationBody>(rotation_body(3, 2.0, 0.0, 10.0).shape);
  CHECK(rotation_radius(f3, 3.0) == doctest::Approx(1.2341e-4).epsilon(1e-4));
  CHECK_THROWS_AS(rotation_body(1, 0.0, 2.0, 1.0), ParameterError);
  CHECK_THROWS_AS(rotation_body(1, 0.0, -1.0, 1.0), ParameterError);
  CHECK_THROWS_AS(rotation_body(4, 0.0, 0.0, 1.0), ParameterError);
}

TEST_CASE("classifier on synthetic shell capacities") {
  const double q = 2.0;
  SUBCASE("capacities growing like the normalizer are not thin") {
    const auto r = classify_thinness(geometric_caps(q, 1.0), kNewton, q);
    CHECK(r.verdict == ThinnessVerdict::not_thin);
    CHECK_FALSE(r.thin_criterion);
    CHECK(r.tail_slope == doctest::Approx(0.0).scale(1.0));
  }
  SUBCASE("slower growth is thin but not ultrathin") {
    const auto r = classify_thinness(geometric_caps(q, 0.5), kNewton, q);
    CHECK(r.verdict == ThinnessVerdict::thin_not_ultrathin);
    CHECK(r.tail_slope == doctest::Approx(-0.5 * std::log(q)));
    CHECK(r.capacity_slope == doctest::Approx(0.5 * std::log(q)));
  }
  SUBCASE("decaying capacities are ultrathin") {
    const auto r = classify_thinness(geometric_caps(q, -1.0), kNewton, q);
    CHECK(r.verdict == ThinnessVerdict::ultrathin);
    CHECK(r.thin_criterion);
    CHECK(r.ultrathin_criterion);
  }
  SUBCASE("empty tails are ultrathin") {
    auto caps = geometric_caps(q, 1.0);
    for (std::size_t i = 6; i < caps.size(); ++i) caps[i].capacity = 0.0;
    CHECK(classify_thinness(caps, kNewton, q).verdict == ThinnessVerdict::ultrathin);
  }
  SUBCASE("partly empty or unreliable tails are inconclusive") {
    auto caps = geometric_caps(q, 1.0);
    caps[10].capacity = 0.0;
    CHECK(classify_thinness(caps, kNewton, q).verdict == ThinnessVerdict::inconclusive);
    caps = geometric_caps(q, 1.0);
    caps[11].reliable = false;
    CHECK(classify_thinness(caps, kNewton, q).verdict == ThinnessVerdict::inconclusive);
  }
  SUBCASE("slow decay inside the threshold stays undecided") {
    // slope -0.1 ln q sits between 0 and -delta
    const auto r = classify_thinness(geometric_caps(q, 0.9), kNewton, q);
    CHECK_FALSE(r.thin_criterion);
    CHECK(r.verdict == ThinnessVerdict::not_thin);
    const auto strict = classify_thinness(geometric_caps(q, 0.9), kNewton, q, 0.01);
    CHECK(strict.verdict == ThinnessVerdict::thin_not_ultrathin);
  }
  SUBCASE("the normalizer follows n - alpha") {
    const KernelParams riesz{1.0, 3};
    // q^(2k) is flat against q^(k (n - alpha)) with n - alpha = 2
    CHECK(classify_thinness(geometric_caps(q, 2.0), riesz, q).verdict == ThinnessVerdict::not_thin);
    CHECK(classify_thinness(geometric_caps(q, 1.0), riesz, q).verdict == ThinnessVerdict::thin_not_ultrathin);
  }
  SUBCASE("argument checks") {
    CHECK_THROWS_AS(classify_thinness(geometric_caps(q, 1.0, 5), kNewton, q), ParameterError);
    CHECK_NOTHROW(classify_thinness(geometric_caps(q, 1.0, 6), kNewton, q));
    CHECK_THROWS_AS(classify_thinness(geometric_caps(q, 1.0), kNewton, 1.0), ParameterError);
    CHECK_THROWS_AS(classify_thinness(geometric_caps(q, 1.0), KernelParams{2.5, 3}, q), ParameterError);
  }
  CHECK(default_delta(2.0) > 0.0);
  CHECK(default_delta(0.5) == doctest::Approx(default_delta(2.0)));
}

TEST_CASE("classifier invariants on random capacity sequences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> rate(-1.5, 1.5);
  std::uniform_real_distribution<double> noise(0.8, 1.25);
  std::uniform_int_distribution<int> count(6, 16);
  for (int trial = 0; trial < 500; ++trial) {
    auto caps = geometric_caps(2.0, rate(rng), count(rng));
    for (auto& c : caps) c.capacity *= noise(rng);
    const auto r = classify_thinness(caps, kNewton, 2.0);
    for (std::size_t i = 1; i < r.partial_sums.size(); ++i) {
      CHECK(r.partial_sums[i] >= r.partial_sums[i - 1]);
      CHECK(r.capacity_partial_sums[i] >= r.capacity_partial_sums[i - 1]);
    }
    if (r.verdict == ThinnessVerdict::ultrathin) CHECK(r.thin_criterion);
    if (r.verdict == ThinnessVerdict::thin_not_ultrathin) CHECK_FALSE(r.ultrathin_criterion);
    if (r.verdict == ThinnessVerdict::not_thin) CHECK_FALSE(r.thin_criterion);
  }
}

TEST_CASE("shell capacities of balls") {
  SUBCASE("a bounded ball leaves the outer shells empty") {
    const ShapeSpec ball = Ball{Point::Zero(3), 1.0};
    const auto caps = shell_capacities(kNewton, ball, Point::Zero(3), 2.0, 1, 12, ShellDirection::outer, 200);
    REQUIRE(caps.size() == 12);
    for (const auto& c : caps) {
      CHECK(c.capacity == 0.0);
      CHECK(c.reliable);
      CHECK(c.nodes == 0);
    }
  }
  SUBCASE("a unit ball inside shell k has capacity one") {
    // oracle: the classical value 1; the grid error shrinks with the spacing
    const ShapeSpec ball = Ball{p3(1.5 * 8.0, 0.0, 0.0), 1.0};
    const auto caps = shell_capacities(kNewton, ball, Point::Zero(3), 2.0, 2, 4, ShellDirection::outer, 4000);
    CHECK(caps[0].capacity == 0.0);
    CHECK(caps[1].capacity == doctest::Approx(1.0).epsilon(0.02));
    CHECK(caps[2].capacity == 0.0);
  }
  SUBCASE("shell capacities are translation invariant") {
    std::vector<double> values;
    for (int k : {2, 3, 5}) {
      const ShapeSpec ball = Ball{p3(1.5 * std::pow(2.0, k), 0.0, 0.0), 1.0};
      const auto caps = shell_capacities(kNewton, ball, Point::Zero(3), 2.0, k, k, ShellDirection::outer, 1000);
      values.push_back(caps[0].capacity);
    }
    CHECK(values[1] == doctest::Approx(values[0]).epsilon(1e-9));
    CHECK(values[2] == doctest::Approx(values[0]).epsilon(1e-9));
  }
  SUBCASE("a starved piece is flagged") {
    const ShapeSpec thin = Box{p3(4.5, 0, 0), p3(5.5, 0.3, 0.3)};
    const auto caps = shell_capacities(kNewton, thin, Point::Zero(3), 2.0, 2, 2, ShellDirection::outer, 1);
    REQUIRE(caps.size() == 1);
    CHECK(caps[0].reliable == (caps[0].nodes > 0));
    CHECK(caps[0].warning.empty() == caps[0].reliable);
  }
  CHECK_THROWS_AS(shell_capacities(kNewton, Ball{Point::Zero(3), 1.0}, Point::Zero(3), 2.0, 1, 6,
                                   ShellDirection::outer, 0),
                  ParameterError);
}

TEST_CASE("growing balls along a ray are not thin") {
  // ball of radius 2^(k-2) centred in shell k: capacity grows like q^k
  Union chain;
  for (int k = 1; k <= 9; ++k) chain.parts.push_back(Ball{p3(1.5 * std::pow(2.0, k), 0, 0), std::pow(2.0, k - 2)});
  const auto caps = shell_capacities(kNewton, chain, Point::Zero(3), 2.0, 1, 9, ShellDirection::outer, 300);
  const auto r = classify_thinness(caps, kNewton, 2.0);
  CHECK(r.verdict == ThinnessVerdict::not_thin);
}

TEST_CASE("Wiener series at a point") {
  SUBCASE("centre of a solid ball is regular") {
    const ShapeSpec ball = Ball{Point::Zero(3), 1.0};
    const auto v = wiener_regularity(kNewton, ball, Point::Zero(3), 0.5, 1, 9, 400);
    CHECK(v.verdict == RegularityClass::regular);
    // full annuli: the terms are a fixed multiple of the same scaled shape
    for (std::size_t i = 1; i < v.series_terms.size(); ++i) {
      CHECK(v.series_terms[i] == doctest::Approx(v.series_terms[0]).epsilon(0.05));
    }
    CHECK(v.partial_sum > 0.0);
  }
  SUBCASE("a point away from a compact set is irregular") {
    const ShapeSpec ball = Ball{p3(2.0, 0, 0), 1.0};
    const auto v = wiener_regularity(kNewton, ball, Point::Zero(3), 0.5, 1, 9, 400);
    CHECK(v.verdict == RegularityClass::irregular);
    CHECK(v.partial_sum == 0.0);
  }
  CHECK_THROWS_AS(wiener_regularity(kNewton, Ball{Point::Zero(3), 1.0}, Point::Zero(3), 2.0, 1, 9), ParameterError);
  CHECK_THROWS_AS(wiener_regularity(kNewton, Ball{Point::Zero(3), 1.0}, Point::Zero(3), 0.5, 1, 4), ParameterError);
}

TEST_CASE("thinness through inversion of a compact ball") {
  const ShapeSpec ball = Ball{p3(3.0, 0, 0), 1.0};
  InversionOptions options;
  options.k_lo = 1;
  options.k_hi = 6;
  options.resolution = 400;
  options.kelvin_shells = 2;
  options.kelvin_resolution = 300;
  const auto cmp = thinness_via_inversion(kNewton, ball, Point::Zero(3), options);
  CHECK(cmp.direct.verdict == ThinnessVerdict::ultrathin);
  CHECK(cmp.inverted.verdict == RegularityClass::irregular);
  CHECK(cmp.agree);
  CHECK_FALSE(cmp.inconclusive);
  CHECK(cmp.transfer_holds);
  CHECK(cmp.kelvin_nodes > 0);
  if (cmp.kelvin_interior) CHECK(cmp.kelvin_deviation < 1e-6);
  CHECK_THROWS_AS(thinness_via_inversion(kNewton, ball, p3(3.0, 0, 0), options), DomainError);
}

TEST_CASE("subadditivity of two spheres") {
  const Discretization a = discretize(Sphere{Point::Zero(3), 1.0}, 300);
  SUBCASE("centres four apart") {
    const Discretization b = discretize(Sphere{p3(4.0, 0, 0), 1.0}, 300);
    const auto gap = subadditivity_gap(kNewton, a, b);
    CHECK(gap.lhs == doctest::Approx(2.0).epsilon(0.02));
    CHECK(gap.capacity_union > 1.5);
    CHECK(gap.capacity_union < 2.0);
    CHECK(gap.rhs >= gap.lhs);
    CHECK(gap.plain_margin > 0.0);
    CHECK(gap.distance == doctest::Approx(2.0).epsilon(0.05));
  }
  SUBCASE("an empty partner") {
    const auto gap = subadditivity_gap(kNewton, a, empty_discretization(3));
    CHECK(gap.capacity_b == 0.0);
    CHECK(gap.lhs == doctest::Approx(gap.capacity_union).epsilon(1e-12));
    CHECK(gap.margin >= -1e-9);
  }
  SUBCASE("margins over a distance sweep") {
    double previous = std::numeric_limits<double>::infinity();
    for (double d : {2.0, 4.0, 8.0, 16.0}) {
      const Discretization b = discretize(Sphere{p3(2.0 + d, 0, 0), 1.0}, 300);
      const auto gap = subadditivity_gap(kNewton, a, b);
      CHECK(gap.margin >= -1e-9);
      CHECK(gap.plain_margin >= -1e-9);
      CHECK(gap.margin <= previous);
      previous = gap.margin;
    }
  }
  CHECK_THROWS_AS(subadditivity_gap(kNewton, a, a), ParameterError);
}
