#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "densinf/geometry.hpp"
#include "densinf/polynomial.hpp"
#include "densinf/rng.hpp"

namespace densinf {

struct FiberPoint {
  Vector x;
  double f_residual = 0.0;  // f(x) - t
  double grad_norm = 0.0;
  double rabier = 0.0;      // |x| |grad f(x)|
  bool tangency = false;    // double root suspected; counted once
};

/// Sample of f^{-1}(t) on the sphere of radius r.
struct FiberPointSet {
  double t = 0.0;
  double r = 0.0;
  std::vector<FiberPoint> points;
  /// true when every scan cell was certified to hold either no root or
  /// exactly one simple root.
  bool complete = false;
};

struct CircleScanOptions {
  std::size_t resolution = 4096;  // initial equispaced cells (M)
  double min_cell = 1e-11;        // uncertified cells are not split below this width (radians)
  std::size_t max_cells = 1u << 20;
};

/// Exact-root scan of g(th) = f(r cos th, r sin th) - t on the circle.
///
/// Roots are bisected down to adjacent doubles in angle (far below 1e-12 rad).
/// Starts from `resolution` equispaced cells. A cell is discarded when an
/// interval enclosure of g excludes zero, accepted as holding at most one
/// simple root when the enclosure of dg/dth excludes zero (the sign test then
/// decides), and split otherwise. Cells that cannot be certified at
/// `min_cell` width mark the set incomplete; a near-zero extremum there is
/// reported once as a tangency point. Odd counts also force complete = false.
FiberPointSet circle_fiber_points(const Polynomial& f, double t, double r,
                                  const CircleScanOptions& opts = {});

/// Raised by newton_project.
class NonConvergence : public std::runtime_error {
 public:
  enum class Kind { kMaxIterations, kRankDeficient };
  NonConvergence(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct Projection {
  Vector x;
  int iterations = 0;
};

/// Damped minimum-norm Newton on (f(x) - t, |x|^2 - r^2). Converged when
/// |f - t| <= tol * max(1, scale of f at x) and ||x| - r| <= tol * r.
Projection newton_project(const DifferentiablePolynomial& f, double t, double r,
                          std::span<const double> x0, double tol = 1e-12,
                          int max_iterations = 60);

enum class SlabMode { kSphere, kBall };

struct SlabDraw {
  Vector x;
  double f_value = 0.0;
  double grad_norm = 0.0;
  double tangential_grad_norm = 0.0;  // |(I - xh xh^T) grad f(x)|
};

struct SlabSample {
  double t = 0.0;
  double r = 0.0;
  double half_width = 0.0;
  SlabMode mode = SlabMode::kSphere;
  std::vector<SlabDraw> draws;  // retained: |f - t| < half_width
  std::size_t n_total = 0;      // all uniform draws, retained or not
};

/// N uniform draws on the sphere (or in the ball) of radius r; keeps those in
/// the slab |f - t| < delta. Ball mode samples the bounding cube with
/// rejection for n <= 4 and Gaussian direction times r U^{1/n} above.
SlabSample slab_sample(const DifferentiablePolynomial& f, double t, double r, double delta,
                       std::size_t n, RngStream& rng, SlabMode mode = SlabMode::kSphere);

/// Fiber points on the sphere for n >= 3: slab draws projected with
/// newton_project, duplicates (closer than 1e-9 r) dropped. Never complete.
FiberPointSet sphere_fiber_points(const DifferentiablePolynomial& f, double t, double r,
                                  double delta, std::size_t n, RngStream& rng);

/// Builds a FiberPoint with all annotations recomputed from x.
FiberPoint annotate(const DifferentiablePolynomial& f, double t, Vector x);

}  // namespace densinf
