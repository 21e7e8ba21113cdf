#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "densinf/density.hpp"
#include "densinf/fiber.hpp"
#include "densinf/kinf.hpp"
#include "densinf/polynomial.hpp"

namespace densinf {

struct ProfileConfig {
  DensityMethod method = DensityMethod::kSphereCount;
  std::vector<double> radii = {8, 16, 32, 64, 128, 256};
  CircleScanOptions scan;
  CoareaBudget coarea;
  std::uint64_t seed = 0;
};

DensityCurve density_curve(const Polynomial& f, double t, const ProfileConfig& cfg);

/// Curve plus extrapolation. Never throws on numeric failure: the estimate
/// comes back flagged with theta = 0 and the reason in `note`.
DensityEstimate estimate_theta(const Polynomial& f, double t, const ProfileConfig& cfg);

/// One estimate per grid point. The grid must be strictly increasing.
std::vector<DensityEstimate> density_profile(const Polynomial& f, std::span<const double> t_grid,
                                             const ProfileConfig& cfg);

using ThetaFn = std::function<DensityEstimate(double)>;

struct Discontinuity {
  double t_location = 0.0;
  double cell_lo = 0.0;  // smallest refined cell (or merged pair of cells) holding the jump
  double cell_hi = 0.0;
  double jump_size = 0.0;
  std::optional<double> nearest_candidate;
};

struct SubintervalModulus {
  double lo = 0.0;
  double hi = 0.0;
  double max_modulus = 0.0;
};

struct LipschitzReport {
  std::vector<double> t_grid;
  std::vector<DensityEstimate> theta;
  std::vector<double> moduli;  // |theta_{i+1} - theta_i| / (t_{i+1} - t_i)
  std::vector<SubintervalModulus> max_modulus_per_interval;
  std::vector<Discontinuity> discontinuities;
  double jump_threshold = 0.0;
  std::string verdict;
};

/// Empirical Lipschitz check of a profile on its grid.
///
/// A cell with |dtheta| > jump_threshold is refined 4x through `refine`; every
/// subcell that still jumps is a discontinuity, and jumping subcells sharing an
/// endpoint are merged (a jump exactly at a grid node shows up on both sides).
/// Without `refine` the coarse cell is reported as is. Moduli per K-infinity
/// free run are computed after excising the cells that contain a candidate.
LipschitzReport lipschitz_report(std::span<const double> t_grid,
                                 std::span<const DensityEstimate> theta, double jump_threshold,
                                 std::span<const double> candidates = {},
                                 const ThetaFn& refine = {});

/// v(t, u) = d/dt + d_x phi (grad f / |grad f|^2) at z = (f(x), phi(x)).
struct RugosityField {
  double t = 0.0;
  Vector u;
  Vector v_tail;
};

/// Throws DomainError when x = 0 or grad f(x) = 0.
RugosityField rugosity_field(const DifferentiablePolynomial& f, std::span<const double> x);

/// |v(z) - v(y)| / |z - y| for y = (t_y, 0).
double rugosity_ratio(const RugosityField& z, double t_y);

struct RugosityPair {
  double r = 0.0;
  double t = 0.0;
  Vector x;
  Vector u;
  double t_y = 0.0;
  double v_tail_norm = 0.0;
  double distance = 0.0;           // |z - y|
  double ratio = 0.0;
  double conformal_product = 0.0;  // |v_tail| |x|^2 |grad f(x)|, at most 1
};

struct RugosityRadius {
  double r = 0.0;
  std::size_t pairs = 0;
  double max_ratio = 0.0;
};

struct RugosityOptions {
  std::size_t pairs_per_radius = 1000;
  double margin = 0.2;  // 10 default bin widths
  CircleScanOptions scan;
  SearchBox sigma_box;
  std::uint64_t seed = 0;
};

struct RugosityReport {
  double a = 0.0;
  double b = 0.0;
  bool refused = false;
  std::string diagnostic;
  double eps1 = 1.0;  // fiber points with |x| <= eps1 are not used
  std::vector<RugosityPair> pairs;
  std::vector<RugosityRadius> per_radius;
  double max_ratio = 0.0;
  double fitted_C = 0.0;  // 95th percentile of the ratios
};

/// Samples fiber points (n = 2) with levels uniform in I = (a, b) on each
/// radius, pairs each with a nearby y = (t_y, 0), t_y uniform in
/// I intersected with [t - 1/r, t + 1/r] (1/r = |u|). When I comes within
/// `margin` of a candidate the report is refused, but the ratios are still
/// computed as a diagnostic. Throws invalid_argument on a bad interval or
/// decreasing radii.
RugosityReport rugosity_check(const Polynomial& f, double a, double b,
                              std::span<const double> radii,
                              std::span<const double> candidates = {},
                              const RugosityOptions& opts = {});

}  // namespace densinf
