#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "densinf/geometry.hpp"
#include "oracles.hpp"

using namespace densinf;

TEST_CASE("invert: examples and involution") {
  const double a[2] = {2, 0}, b[2] = {1, 1};
  CHECK(invert(a) == Vector{0.5, 0.0});
  CHECK(invert(b) == Vector{0.5, 0.5});
  const double z[2] = {0, 0};
  CHECK_THROWS_AS(invert(z), DomainError);

  RngStream rng(1, Stage::kGeneric, 0);
  for (int k = 0; k < 1000; ++k) {
    Vector x(2 + k % 3);
    for (auto& v : x) v = std::exp(rng.uniform(-4, 4)) * rng.normal();
    const Vector y = invert(invert(x));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) <= 1e-12 * norm(x));
    CHECK(norm(invert(x)) == doctest::Approx(1.0 / norm(x)).epsilon(1e-14));
  }
}

TEST_CASE("inversion_jacobian: matrix at (1, 0) and (0, 2)") {
  const double a[2] = {1, 0}, b[2] = {0, 2};
  const JacobianMatrix ja = inversion_jacobian(a);
  CHECK(ja(0, 0) == -1.0);
  CHECK(ja(0, 1) == 0.0);
  CHECK(ja(1, 0) == 0.0);
  CHECK(ja(1, 1) == 1.0);
  const JacobianMatrix jb = inversion_jacobian(b);
  CHECK(jb(0, 0) == 0.25);
  CHECK(jb(1, 1) == -0.25);
  CHECK(jb(0, 1) == 0.0);
}

TEST_CASE("inversion_jacobian: matches finite differences of invert") {
  RngStream rng(2, Stage::kGeneric, 0);
  for (int k = 0; k < 200; ++k) {
    Vector x(3);
    for (auto& v : x) v = rng.normal();
    const JacobianMatrix j = inversion_jacobian(x);
    const double h = 1e-6 * norm(x);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t r = 0; r < 3; ++r) {
        const double fd = oracle::central_difference(
            [&](const std::vector<double>& y) { return invert(y)[r]; }, x, c, h);
        CHECK(std::abs(fd - j(r, c)) <= 1e-5 / std::pow(norm(x), 2));
      }
    }
  }
}

TEST_CASE("conformality: every singular value is |x|^-2 (SVD oracle)") {
  RngStream rng(3, Stage::kGeneric, 0);
  for (std::size_t n : {2u, 3u, 5u}) {
    for (int k = 0; k < 1000; ++k) {
      Vector x(n);
      const double s = std::exp(rng.uniform(-3, 3));
      for (auto& v : x) v = s * rng.normal();
      const JacobianMatrix j = inversion_jacobian(x);
      Eigen::MatrixXd m(n, n);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) m(r, c) = j(r, c);
      const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
      const double expect = 1.0 / dot(x, x);
      for (Eigen::Index i = 0; i < sv.size(); ++i) CHECK(std::abs(sv(i) - expect) <= 1e-10 * expect);
    }
  }
}

TEST_CASE("apply_inversion_jacobian equals the dense product") {
  RngStream rng(4, Stage::kGeneric, 0);
  for (int k = 0; k < 500; ++k) {
    Vector x(3), v(3);
    for (auto& c : x) c = rng.normal();
    for (auto& c : v) c = rng.normal();
    const Vector a = apply_inversion_jacobian(x, v);
    const Vector b = inversion_jacobian(x).apply(v);
    for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12).scale(norm(b)));
  }
}

TEST_CASE("invert_fiber_polynomial: hand substitutions") {
  CHECK(invert_fiber_polynomial(parse_polynomial("x*y", 2), 1.0) ==
        parse_polynomial("x*y - (x^2 + y^2)^2", 2));
  CHECK(invert_fiber_polynomial(parse_polynomial("x + x^2*y", 2), 0.0) ==
        parse_polynomial("x*(x^2 + y^2)^2 + x^2*y", 2));
  CHECK_THROWS_AS(invert_fiber_polynomial(Polynomial::constant(2, 3), 1.0), std::invalid_argument);
}

TEST_CASE("invert_fiber_polynomial: G(phi(x)) = (f(x) - t) / |x|^(2d)") {
  RngStream rng(5, Stage::kGeneric, 0);
  const char* fs[] = {"x + x^2*y", "x*y - 3*y^2 + 1", "x^3 - 2*x*y*z + z", "x1^2*x4 - x2*x3 + 0.5"};
  const std::size_t ns[] = {2, 2, 3, 4};
  for (int i = 0; i < 4; ++i) {
    const Polynomial f = parse_polynomial(fs[i], ns[i]);
    const int d = f.degree();
    for (double t : {-1.5, 0.0, 2.0}) {
      const Polynomial g = invert_fiber_polynomial(f, t);
      for (int k = 0; k < 250; ++k) {
        Vector x(ns[i]);
        for (auto& c : x) c = 2.0 * rng.normal();
        const double expect = (f(x) - t) / std::pow(dot(x, x), d);
        const Vector u = invert(x);
        const double scale = (f.magnitude(x) + std::abs(t)) / std::pow(dot(x, x), d);
        CHECK(std::abs(g(u) - expect) <= 1e-9 * scale);
      }
    }
  }
}

TEST_CASE("uniform_sphere_sample: norms, mean and determinism") {
  RngStream a(9, Stage::kGeneric, 1);
  const SphereSample s = uniform_sphere_sample(2, 3.0, 4, a);
  REQUIRE(s.points.size() == 4);
  for (const auto& p : s.points) CHECK(std::abs(norm(p) - 3.0) <= 1e-12 * 3.0);

  RngStream b(9, Stage::kGeneric, 1);
  const SphereSample s2 = uniform_sphere_sample(2, 3.0, 4, b);
  CHECK(s.points == s2.points);
  CHECK(s.rng_stream_id == s2.rng_stream_id);

  const std::size_t n = 1000000;
  RngStream c(10, Stage::kGeneric, 2);
  const SphereSample big = uniform_sphere_sample(3, 2.0, n, c);
  Vector mean(3, 0.0);
  for (const auto& p : big.points)
    for (int i = 0; i < 3; ++i) mean[i] += p[i] / n;
  for (int i = 0; i < 3; ++i) CHECK(std::abs(mean[i]) <= 4.0 * 2.0 / std::sqrt(double(n)));
}

TEST_CASE("tangent_projection_norm: examples") {
  const double p[2] = {0, 5};
  CHECK(tangent_projection_norm(parse_polynomial("x", 2), p) == doctest::Approx(1.0));
  const Polynomial circ = parse_polynomial("x^2 + y^2", 2);
  RngStream rng(6, Stage::kGeneric, 0);
  for (int k = 0; k < 100; ++k) {
    const double x[2] = {rng.normal(), rng.normal()};
    CHECK(tangent_projection_norm(circ, x) <= 1e-12);
  }
  const Polynomial xy = parse_polynomial("x*y", 2);
  double prev = 0.0;
  for (double s : {2.0, 10.0, 100.0, 1000.0}) {
    const double x[2] = {s, 1.0 / s};
    const double v = tangent_projection_norm(xy, x);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(prev > 0.999999);
  const double origin[2] = {0, 0};
  CHECK_THROWS_AS(tangent_projection_norm(xy, origin), DomainError);
}

TEST_CASE("arc length scales by r^-2 under inversion") {
  for (double r : {0.5, 3.0, 40.0}) {
    auto arc = [&](double th) { return std::pair{r * std::cos(th), r * std::sin(th)}; };
    auto image = [&](double th) {
      const double x[2] = {r * std::cos(th), r * std::sin(th)};
      const Vector u = invert(x);
      return std::pair{u[0], u[1]};
    };
    const double len = oracle::polyline_length(arc, 0, std::numbers::pi / 2, 20000);
    const double len_img = oracle::polyline_length(image, 0, std::numbers::pi / 2, 20000);
    CHECK(std::abs(len_img - len / (r * r)) <= 1e-6 * len / (r * r));
    CHECK(std::abs(len_img - std::numbers::pi / (2 * r)) <= 1e-6 * len_img);
  }
}

TEST_CASE("unit volumes") {
  CHECK(unit_sphere_volume(0) == doctest::Approx(2.0));
  CHECK(unit_sphere_volume(1) == doctest::Approx(2 * std::numbers::pi));
  CHECK(unit_sphere_volume(2) == doctest::Approx(4 * std::numbers::pi));
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(2) == doctest::Approx(std::numbers::pi));
  CHECK(unit_ball_volume(3) == doctest::Approx(4 * std::numbers::pi / 3));
}
