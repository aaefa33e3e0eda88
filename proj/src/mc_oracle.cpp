#include "riesz/mc_oracle.hpp"

#include <cmath>
#include <numbers>
#include <variant>

namespace riesz {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check_target(const ShapeSpec& target) {
  if (const auto* u = std::get_if<Union>(&target.shape)) {
    if (u->parts.empty()) throw ParameterError("empty walk-on-spheres target");
    for (const auto& part : u->parts) check_target(part);
    return;
  }
  if (!std::holds_alternative<Ball>(target.shape) && !std::holds_alternative<Sphere>(target.shape)) {
    throw ParameterError("walk-on-spheres targets must be balls, spheres or unions of them");
  }
}

struct Enclosure {
  Point center;
  double radius = 0.0;
};

void extend(const ShapeSpec& target, const Point& center, double& radius) {
  if (const auto* u = std::get_if<Union>(&target.shape)) {
    for (const auto& part : u->parts) extend(part, center, radius);
  } else if (const auto* b = std::get_if<Ball>(&target.shape)) {
    radius = std::max(radius, (b->center - center).norm() + b->radius);
  } else if (const auto* s = std::get_if<Sphere>(&target.shape)) {
    radius = std::max(radius, (s->center - center).norm() + s->radius);
  }
}

Enclosure enclosure(const ShapeSpec& target) {
  const BoundingBox box = bounding_box(target);
  Enclosure e{0.5 * (box.lo + box.hi), 0.0};
  extend(target, e.center, e.radius);
  return e;
}

}  // namespace

WalkerRng::WalkerRng(std::uint64_t seed, std::uint64_t index)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL))) {}

double WalkerRng::uniform() { return std::generate_canonical<double, 53>(engine_); }

Point WalkerRng::direction(int n) {
  if (n == 3) {
    const double z = 2.0 * uniform() - 1.0;
    const double phi = 2.0 * std::numbers::pi * uniform();
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Point{{s * std::cos(phi), s * std::sin(phi), z}};
  }
  std::normal_distribution<double> normal;
  Point v(n);
  do {
    for (int i = 0; i < n; ++i) v[i] = normal(engine_);
  } while (v.norm() == 0.0);
  return v.normalized();
}

Point sample_return_point(const Point& x, const Point& center, double r0, WalkerRng& rng) {
  const double r = (x - center).norm();
  if (!(r > r0)) throw DomainError("return sampling needs a start outside the sphere");
  const double nearest = r - r0;
  for (;;) {
    const Point z = center + r0 * rng.direction(static_cast<int>(x.size()));
    const double ratio = nearest / (x - z).norm();
    if (rng.uniform() < ratio * ratio * ratio) return z;
  }
}

double target_distance(const ShapeSpec& target, const Point& x) {
  if (const auto* u = std::get_if<Union>(&target.shape)) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& part : u->parts) d = std::min(d, target_distance(part, x));
    return d;
  }
  if (const auto* b = std::get_if<Ball>(&target.shape)) {
    return std::max(0.0, (x - b->center).norm() - b->radius);
  }
  if (const auto* s = std::get_if<Sphere>(&target.shape)) {
    return std::abs((x - s->center).norm() - s->radius);
  }
  throw ParameterError("walk-on-spheres targets must be balls, spheres or unions of them");
}

HitStats wos_hit(const KernelParams& params, const Point& y, const ShapeSpec& target,
                 const WalkOptions& options) {
  params.validate();
  if (!params.newtonian()) throw ParameterError("walk on spheres supports alpha = 2, n = 3 only");
  check_target(target);
  validate(target);
  if (y.size() != 3 || !y.allFinite()) throw ParameterError("walk start must be a finite point of R^3");
  if (options.n_walkers <= 0) throw ParameterError("walker count must be positive");
  if (options.epsilon < 0.0 || !std::isfinite(options.epsilon)) {
    throw ParameterError("epsilon must be positive");
  }
  const Enclosure enc = enclosure(target);
  const double epsilon = options.epsilon > 0.0 ? options.epsilon : 2e-4 * enc.radius;
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");

  const auto count = static_cast<std::size_t>(options.n_walkers);
  std::vector<unsigned char> hit(count, 0);
  std::vector<Point> contact(count);
  std::vector<int> steps(count, 0);
  parallel_for(count, [&](std::size_t w) {
    WalkerRng rng(options.seed, w);
    Point x = y;
    for (int step = 0; step < options.max_steps; ++step) {
      steps[w] = step;
      const double d = target_distance(target, x);
      if (d <= epsilon) {
        hit[w] = 1;
        contact[w] = x;
        return;
      }
      const double r = (x - enc.center).norm();
      if (r > 2.0 * enc.radius) {
        if (rng.uniform() >= enc.radius / r) return;
        x = sample_return_point(x, enc.center, enc.radius, rng);
        continue;
      }
      x += d * rng.direction(3);
    }
  });

  HitStats stats;
  stats.n_walkers = options.n_walkers;
  stats.seed = options.seed;
  stats.epsilon = epsilon;
  stats.barycenter = Point::Zero(3);
  stats.barycenter_std_error = Point::Zero(3);
  Point sum_sq = Point::Zero(3);
  double total_steps = 0.0;
  for (std::size_t w = 0; w < count; ++w) {
    total_steps += steps[w];
    if (!hit[w]) continue;
    ++stats.hits;
    stats.barycenter += contact[w];
    sum_sq += contact[w].cwiseAbs2();
    if (options.record_hits && stats.hit_points.size() < options.max_recorded) {
      stats.hit_points.push_back(contact[w]);
    }
  }
  stats.mean_steps = total_steps / static_cast<double>(count);
  const double n = static_cast<double>(count);
  stats.hit_probability = static_cast<double>(stats.hits) / n;
  stats.std_error = std::sqrt(stats.hit_probability * (1.0 - stats.hit_probability) / n);
  if (stats.hits > 0) {
    const double h = static_cast<double>(stats.hits);
    stats.barycenter /= h;
    if (stats.hits > 1) {
      const Point var = (sum_sq / h - stats.barycenter.cwiseAbs2()).cwiseMax(0.0) * (h / (h - 1.0));
      stats.barycenter_std_error = (var / h).cwiseSqrt();
    }
  }
  return stats;
}

}  // namespace riesz
