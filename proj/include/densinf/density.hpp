#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "densinf/fiber.hpp"
#include "densinf/polynomial.hpp"
#include "densinf/rng.hpp"

namespace densinf {

enum class DensityMethod { kSphereCount, kSphereCoarea, kBallCoarea, kInversion };

std::string to_string(DensityMethod m);
/// Accepts sphere_count, sphere_coarea, ball_coarea, inversion.
DensityMethod parse_density_method(const std::string& name);

struct DensitySample {
  double r = 0.0;  // sphere radius (for inversion: the original radius, rho = 1/r)
  double value = 0.0;
  double stderr_ = 0.0;
  bool reliable = true;
};

struct DensityCurve {
  double t = 0.0;
  DensityMethod method = DensityMethod::kSphereCount;
  std::vector<DensitySample> samples;
};

/// Extrapolated theta(., infinity). alpha = +inf marks an exact (constant-tail) limit.
struct DensityEstimate {
  double theta = 0.0;
  double c = 0.0;
  double alpha = 0.0;
  double fit_residual = 0.0;
  int n_points_used = 0;
  double stderr_ = 0.0;
  bool flagged = false;  // noisy or out-of-range tail; theta is the widest-radius value
  std::string note;
};

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometric radius schedule r0 * ratio^j, j = 0..count-1.
std::vector<double> geometric_radii(double r0, std::size_t count, double ratio = 2.0);

/// value(r) = #(f^{-1}(t) on the circle of radius r) / 2; exact for n = 2.
DensityCurve sphere_count_density(const Polynomial& f, double t, std::span<const double> radii,
                                  const CircleScanOptions& opts = {});

struct CoareaResult {
  double value = 0.0;
  double stderr_ = 0.0;
  double delta = 0.0;
  std::size_t retained = 0;
};

/// Co-area estimate on the sphere with the tangential gradient, normalised by
/// vol_{n-2}(S^{n-2}_r). Throws EstimationError when no draw lands in the slab.
CoareaResult sphere_coarea_density(const DifferentiablePolynomial& f, double t, double r,
                                   double delta, std::size_t n, RngStream& rng);

/// Co-area estimate in the ball with the full gradient, normalised by
/// vol_{n-1}(B^{n-1}_r).
CoareaResult ball_coarea_density(const DifferentiablePolynomial& f, double t, double r,
                                 double delta, std::size_t n, RngStream& rng);

/// Slab half-width policy for the co-area estimators. With no fixed delta,
/// starts at 0.05 (1 + |t|) and doubles until at least `min_retained` draws
/// land in the slab (the same stream is replayed each time).
struct CoareaBudget {
  std::size_t samples = 100000;
  std::size_t min_retained = 1000;
  std::optional<double> delta;
  int max_doublings = 12;
};

CoareaResult coarea_with_budget(const DifferentiablePolynomial& f, double t, double r,
                                SlabMode mode, const CoareaBudget& budget,
                                std::uint64_t stream_key);

/// Curve over a radius schedule with one RNG stream per (t, radius index).
DensityCurve coarea_density_curve(const Polynomial& f, double t, std::span<const double> radii,
                                  SlabMode mode, const CoareaBudget& budget, std::uint64_t seed,
                                  Stage stage = Stage::kDensity);

struct OriginDensityOptions {
  CircleScanOptions scan;
  CoareaBudget coarea;  // n >= 3 only; delta is picked as a quantile of |G|
  std::uint64_t seed = 0;
};

/// Density of {G = 0} at the origin along decreasing rhos. For n = 2 counts
/// circle intersections; for n >= 3 uses sphere co-area at level 0 with the
/// slab half-width set to the `min_retained`-th smallest |G| among the draws.
/// A curve for G(0) != 0 is returned as all zeros with `warning` set.
DensityCurve density_at_origin(const Polynomial& g, std::span<const double> rhos,
                               const OriginDensityOptions& opts = {},
                               std::string* warning = nullptr);

/// Builds G_t = invert_fiber_polynomial(f, t) and evaluates density_at_origin
/// at rho = 1 / r; the returned curve is indexed by the original radii.
DensityCurve inversion_density(const Polynomial& f, double t, std::span<const double> radii,
                               const OriginDensityOptions& opts = {});

/// Limit of a curve as r -> infinity (or rho -> 0 for origin curves).
///
/// Count curves whose last two reliable values coincide return that value
/// exactly. Otherwise the tail is fitted by theta + c r^{-alpha} (weighted
/// least squares when stderrs are present, alpha profiled on (0, 8]); a
/// constant model is preferred when it already explains noisy data (chi^2
/// test). Needs >= 3 reliable samples.
DensityEstimate extrapolate_limit(const DensityCurve& curve);

}  // namespace densinf
