#pragma once

#include "riesz/geometry.hpp"
#include "riesz/kernel.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace riesz {

// Random stream of one walker, derived from (seed, index) alone so results do
// not depend on how walkers are scheduled.
class WalkerRng {
 public:
  WalkerRng(std::uint64_t seed, std::uint64_t index);

  double uniform();  // in [0, 1)
  Point direction(int n);  // uniform on the unit sphere

 private:
  std::mt19937_64 engine_;
};

// Return position on the sphere |z - center| = r0 for a walker at x with
// |x - center| > r0, drawn from the exterior hitting density conditioned on
// return: proportional to |x - z|^-3.
Point sample_return_point(const Point& x, const Point& center, double r0, WalkerRng& rng);

struct HitStats {
  std::int64_t n_walkers = 0;
  std::int64_t hits = 0;
  double hit_probability = 0.0;
  double std_error = 0.0;
  std::vector<Point> hit_points;  // only when requested
  Point barycenter;               // mean first-contact position of the hits
  Point barycenter_std_error;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  double mean_steps = 0.0;
};

struct WalkOptions {
  double epsilon = 0.0;  // 0 selects 1e-4 x diameter of the enclosing ball
  std::int64_t n_walkers = 100000;
  std::uint64_t seed = 0;
  bool record_hits = false;
  std::size_t max_recorded = 1000000;
  int max_steps = 100000;  // per walker, counted as escape when exceeded
};

// Brownian hitting probability of `target` from y by walk on spheres. Only
// the Newtonian kernel in R^3 and targets built from balls and spheres are
// supported; anything else throws ParameterError.
HitStats wos_hit(const KernelParams& params, const Point& y, const ShapeSpec& target,
                 const WalkOptions& options = {});

// Distance from x to a target made of balls, spheres and unions of them
// (0 inside a ball).
double target_distance(const ShapeSpec& target, const Point& x);

}  // namespace riesz
