#include "densinf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace densinf {

namespace {

double squared_norm(std::span<const double> x) { return dot(x, x); }

double nonzero_squared_norm(std::span<const double> x, const char* what) {
  const double n2 = squared_norm(x);
  if (!(n2 > 0.0)) throw DomainError(std::string(what) + ": undefined at the origin");
  return n2;
}

}  // namespace

Vector JacobianMatrix::apply(std::span<const double> v) const {
  Vector out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i] += entries[i * n + j] * v[j];
  }
  return out;
}

Vector invert(std::span<const double> x) {
  const double n2 = nonzero_squared_norm(x, "invert");
  Vector u(x.begin(), x.end());
  for (auto& c : u) c /= n2;
  return u;
}

JacobianMatrix inversion_jacobian(std::span<const double> x) {
  const double n2 = nonzero_squared_norm(x, "inversion_jacobian");
  const double n4 = n2 * n2;
  JacobianMatrix j{x.size(), std::vector<double>(x.size() * x.size())};
  for (std::size_t a = 0; a < x.size(); ++a) {
    for (std::size_t b = 0; b < x.size(); ++b) {
      const double diag = a == b ? n2 : 0.0;
      j.entries[a * x.size() + b] = (diag - 2.0 * x[a] * x[b]) / n4;
    }
  }
  return j;
}

Vector apply_inversion_jacobian(std::span<const double> x, std::span<const double> v) {
  const double n2 = nonzero_squared_norm(x, "apply_inversion_jacobian");
  const double proj = 2.0 * dot(x, v) / n2;
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (v[i] - proj * x[i]) / n2;
  return out;
}

Polynomial invert_fiber_polynomial(const Polynomial& f, double t) {
  if (f.is_constant()) {
    throw std::invalid_argument("invert_fiber_polynomial: f must be non-constant");
  }
  const std::size_t n = f.nvars();
  const auto d = static_cast<unsigned>(f.degree());

  Polynomial s(n);
  for (std::size_t i = 0; i < n; ++i) {
    Polynomial u = Polynomial::variable(n, i);
    s = s + u * u;
  }
  std::vector<Polynomial> s_pow{Polynomial::constant(n, 1.0)};
  for (unsigned k = 1; k <= d; ++k) s_pow.push_back(s_pow.back() * s);

  Polynomial g(n);
  for (std::size_t k = 0; k < f.size(); ++k) {
    auto e = f.exponents(k);
    unsigned deg = 0;
    for (auto v : e) deg += v;
    Polynomial mono(n, {Term{f.coeff(k), {e.begin(), e.end()}}});
    g = g + mono * s_pow[d - deg];
  }
  return g - s_pow[d].scaled(t);
}

SphereSample uniform_sphere_sample(std::size_t n, double r, std::size_t count, RngStream& rng) {
  if (n < 2) throw std::invalid_argument("uniform_sphere_sample: n must be >= 2");
  if (!(r > 0.0)) throw std::invalid_argument("uniform_sphere_sample: r must be positive");
  SphereSample s{r, {}, rng.id()};
  s.points.reserve(count);
  Vector p(n);
  for (std::size_t k = 0; k < count; ++k) {
    double n2 = 0.0;
    do {
      for (auto& c : p) c = rng.normal();
      n2 = squared_norm(p);
    } while (n2 == 0.0);
    const double scale = r / std::sqrt(n2);
    for (auto& c : p) c *= scale;
    s.points.push_back(p);
  }
  return s;
}

SphereSample circle_grid(double r, std::size_t m) {
  SphereSample s{r, {}, 0};
  s.points.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
    s.points.push_back({r * std::cos(th), r * std::sin(th)});
  }
  return s;
}

double tangent_projection_norm(const DifferentiablePolynomial& f, std::span<const double> x) {
  const double xn = norm(x);
  if (!(xn > 0.0)) throw DomainError("tangent_projection_norm: undefined at the origin");
  Vector g = f.gradient(x);
  const double gn = norm(g);
  if (!(gn > 0.0)) throw DomainError("tangent_projection_norm: vanishing gradient");
  double c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) c += (g[i] / gn) * (x[i] / xn);
  double s2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = x[i] / xn - c * g[i] / gn;
    s2 += w * w;
  }
  return std::clamp(std::sqrt(s2), 0.0, 1.0);
}

double tangent_projection_norm(const Polynomial& f, std::span<const double> x) {
  return tangent_projection_norm(DifferentiablePolynomial(f), x);
}

double unit_sphere_volume(std::size_t k) {
  const double m = static_cast<double>(k + 1);
  return 2.0 * std::pow(std::numbers::pi, m / 2.0) / std::tgamma(m / 2.0);
}

double unit_ball_volume(std::size_t k) {
  const double m = static_cast<double>(k);
  return std::pow(std::numbers::pi, m / 2.0) / std::tgamma(m / 2.0 + 1.0);
}

}  // namespace densinf
