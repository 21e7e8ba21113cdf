#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "densinf/polynomial.hpp"
#include "densinf/rng.hpp"

namespace densinf {

/// Raised when an operation is evaluated where it is undefined
/// (inversion at the origin, normalising a vanishing gradient, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// d(phi) at a point, phi(x) = x / |x|^2. Dense row-major storage.
struct JacobianMatrix {
  std::size_t n = 0;
  std::vector<double> entries;

  double operator()(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
  Vector apply(std::span<const double> v) const;
};

struct SphereSample {
  double radius = 0.0;
  std::vector<Vector> points;
  std::uint64_t rng_stream_id = 0;
};

/// phi(x) = x / |x|^2. Throws DomainError at x = 0.
Vector invert(std::span<const double> x);

/// Entry (i, j) is (|x|^2 delta_ij - 2 x_i x_j) / |x|^4.
JacobianMatrix inversion_jacobian(std::span<const double> x);

/// d_x(phi) v via the rank-one form (v - 2 xh <xh, v>) / |x|^2, no matrix built.
Vector apply_inversion_jacobian(std::span<const double> x, std::span<const double> v);

/// Implicit equation of the inverted fiber phi(f^{-1}(t) \ {0}):
///   G_t(u) = sum_a c_a u^a |u|^{2(d - |a|)} - t |u|^{2d},   d = deg f,
/// so that G_t(phi(x)) = (f(x) - t) / |x|^{2d}. Built with exact polynomial
/// arithmetic. Throws std::invalid_argument for constant f.
Polynomial invert_fiber_polynomial(const Polynomial& f, double t);

/// N points uniform on the sphere of radius r in R^n (normalised Gaussians).
SphereSample uniform_sphere_sample(std::size_t n, double r, std::size_t count, RngStream& rng);

/// M equispaced points r (cos 2 pi k / M, sin 2 pi k / M), k = 0..M-1.
SphereSample circle_grid(double r, std::size_t m);

/// | (I - n n^T) x/|x| | with n = grad f(x) / |grad f(x)|: the norm of the
/// gradient of |.| restricted to the fiber through x. In [0, 1].
/// Throws DomainError where the gradient vanishes or x = 0.
double tangent_projection_norm(const Polynomial& f, std::span<const double> x);
double tangent_projection_norm(const DifferentiablePolynomial& f, std::span<const double> x);

/// Volume of the unit sphere S^{k} (k-dimensional) and unit ball B^{k}.
double unit_sphere_volume(std::size_t k);
double unit_ball_volume(std::size_t k);

}  // namespace densinf
