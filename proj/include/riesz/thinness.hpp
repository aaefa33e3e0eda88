#pragma once

#include "riesz/geometry.hpp"
#include "riesz/kernel.hpp"
#include "riesz/potential_ops.hpp"

#include <optional>
#include <string>
#include <vector>

namespace riesz {

struct ShellCapacity {
  int k = 0;
  double capacity = 0.0;
  Eigen::Index nodes = 0;
  bool reliable = true;
  std::string warning;
};

// Capacity of every shell piece of `shape` around y. `resolution` is the
// node budget of each piece. Pieces that cannot meet the shape report 0;
// pieces that may meet it but got no nodes are marked unreliable.
std::vector<ShellCapacity> shell_capacities(const KernelParams& params, const ShapeSpec& shape,
                                            const Point& y, double q, int k_lo, int k_hi,
                                            ShellDirection direction, int resolution = 1000,
                                            double tol = 1e-9);

enum class ThinnessVerdict { not_thin, thin_not_ultrathin, ultrathin, inconclusive };
enum class RegularityClass { regular, irregular, inconclusive };

std::string to_string(ThinnessVerdict verdict);
std::string to_string(RegularityClass verdict);

// Default decay threshold for the tail-slope rule.
double default_delta(double q);

struct ThinnessReport {
  std::vector<ShellCapacity> shell_caps;
  std::vector<double> terms;         // c_k / q^(k (n - alpha))
  std::vector<double> partial_sums;  // of terms
  std::vector<double> capacity_partial_sums;
  double tail_slope = 0.0;      // slope of log terms over the last third
  double capacity_slope = 0.0;  // slope of log c_k over the last third
  bool thin_criterion = false;
  bool ultrathin_criterion = false;
  ThinnessVerdict verdict = ThinnessVerdict::inconclusive;
  double q = 2.0;
  double delta = 0.0;
  int k_lo = 0;
  int k_hi = 0;
};

// Throws ParameterError for fewer than 6 shells.
ThinnessReport classify_thinness(const std::vector<ShellCapacity>& shell_caps, const KernelParams& params,
                                 double q, std::optional<double> delta = std::nullopt);

struct RegularityVerdict {
  Point y;
  std::vector<ShellCapacity> shell_caps;
  std::vector<double> series_terms;
  double partial_sum = 0.0;
  double tail_slope = 0.0;
  RegularityClass verdict = RegularityClass::inconclusive;
};

// Wiener series at y over the inner shells q^(k+1) < |x - y| <= q^k, 0 < q < 1.
RegularityVerdict wiener_regularity(const KernelParams& params, const ShapeSpec& shape, const Point& y,
                                    double q, int k_lo, int k_hi, int resolution = 1000,
                                    std::optional<double> delta = std::nullopt, double tol = 1e-9);

struct TransferBound {
  int k = 0;
  double capacity = 0.0;           // c(A_k)
  double inverted_capacity = 0.0;  // c(A_k*)
  double lower = 0.0;              // q^-(2k+2)(n-alpha) c(A_k)
  double upper = 0.0;              // q^-2k(n-alpha) c(A_k)
  bool holds = false;              // within the relative slack
};

struct InversionComparison {
  ThinnessReport direct;
  RegularityVerdict inverted;
  bool agree = false;
  bool inconclusive = false;
  std::vector<TransferBound> transfer;
  bool transfer_holds = false;
  // Kelvin cross-check on a compact piece: max atomwise deviation between the
  // sweep of the Dirac at y onto the inverted piece and the Kelvin transform
  // of the piece's equilibrium measure, relative to the largest weight.
  double kelvin_deviation = 0.0;
  bool kelvin_interior = false;
  Eigen::Index kelvin_nodes = 0;
};

struct InversionOptions {
  double q = 2.0;
  int k_lo = 1;
  int k_hi = 12;
  int resolution = 1000;  // per shell
  double transfer_slack = 0.10;
  int kelvin_shells = 3;  // shells in the compact piece of the cross-check
  int kelvin_resolution = 600;
  std::optional<double> delta;
  double tol = 1e-9;
};

// Throws DomainError when y lies in the shape.
InversionComparison thinness_via_inversion(const KernelParams& params, const ShapeSpec& shape,
                                           const Point& y, const InversionOptions& options = {});

struct SubadditivityGap {
  double capacity_a = 0.0;
  double capacity_b = 0.0;
  double capacity_union = 0.0;
  double distance = 0.0;
  double lhs = 0.0;  // c(A) + c(B)
  double rhs = 0.0;  // c(A u B) (1 + max(c(A), c(B)) / d^(n - alpha))
  double margin = 0.0;
  double plain_margin = 0.0;  // c(A) + c(B) - c(A u B)
};

// Throws ParameterError when the node sets touch.
SubadditivityGap subadditivity_gap(const KernelParams& params, const Discretization& a,
                                   const Discretization& b, double tol = 1e-9);

// Solid of revolution of the given family; see RotationBody.
ShapeSpec rotation_body(int family, double s, double x1_lo, double x1_hi);

}  // namespace riesz
