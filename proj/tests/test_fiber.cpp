#include <doctest.h>

#include <cmath>
#include <numbers>

#include "densinf/fiber.hpp"
#include "oracles.hpp"

using namespace densinf;

namespace {

void check_invariants(const Polynomial& f, const FiberPointSet& s) {
  const DifferentiablePolynomial df(f);
  for (const auto& p : s.points) {
    CHECK(std::abs(norm(p.x) - s.r) <= 1e-10 * s.r);
    CHECK(std::abs(f(p.x) - s.t) <= 1e-9 * std::max(1.0, f.magnitude(p.x)));
    CHECK(p.f_residual == f(p.x) - s.t);
    const double nu = norm(p.x) * df.gradient_norm(p.x);
    CHECK(std::abs(nu - p.rabier) <= 1e-12 * std::max(1.0, nu));
  }
}

}  // namespace

TEST_CASE("circle scan: line through the origin") {
  const Polynomial f = parse_polynomial("x", 2);
  const FiberPointSet s = circle_fiber_points(f, 0.0, 1.0);
  REQUIRE(s.points.size() == 2);
  CHECK(s.complete);
  for (const auto& p : s.points) {
    CHECK(std::abs(p.x[0]) <= 1e-12);
    CHECK(std::abs(std::abs(p.x[1]) - 1.0) <= 1e-12);
  }
  check_invariants(f, s);
}

TEST_CASE("circle scan: counts agree with a brute-force sign-change oracle") {
  struct Case {
    const char* src;
    oracle::Fn2 fn;
    double t, r;
    std::size_t expect;
  };
  const std::vector<Case> cases = {
      {"x*y", [](double x, double y) { return x * y; }, 1.0, 10.0, 4},
      {"x*y", [](double x, double y) { return x * y; }, 100.0, 1.0, 0},
      {"x + x^2*y", [](double x, double y) { return x + x * x * y; }, 0.0, 50.0, 6},
      {"x + x^2*y", [](double x, double y) { return x + x * x * y; }, 0.1, 50.0, 4},
      {"x + x^2*y", [](double x, double y) { return x + x * x * y; }, -0.5, 20.0, 4},
      {"x^3 - 3*x*y^2 + 1", [](double x, double y) { return x * x * x - 3 * x * y * y + 1; }, 0.5, 3.0, 6},
  };
  for (const auto& c : cases) {
    CAPTURE(c.src);
    CAPTURE(c.t);
    CAPTURE(c.r);
    const Polynomial f = parse_polynomial(c.src, 2);
    const FiberPointSet s = circle_fiber_points(f, c.t, c.r);
    CHECK(s.points.size() == c.expect);
    CHECK(static_cast<int>(s.points.size()) == oracle::circle_sign_changes(c.fn, c.t, c.r));
    CHECK(s.complete);
    check_invariants(f, s);
  }
}

TEST_CASE("circle scan: Broughton roots 1/r^2 apart stay separated at large r") {
  const Polynomial f = parse_polynomial("x + x^2*y", 2);
  for (double r : {256.0, 1000.0}) {
    const FiberPointSet s = circle_fiber_points(f, 0.0, r);
    CHECK(s.points.size() == 6);
    CHECK(s.complete);
    check_invariants(f, s);
  }
}

TEST_CASE("circle scan: doubling M never lowers the count") {
  const Polynomial f = parse_polynomial("x + x^2*y", 2);
  for (double t : {-1.0, -0.1, 0.0, 0.1, 1.0}) {
    for (double r : {8.0, 64.0, 256.0}) {
      std::size_t prev = 0;
      for (std::size_t m : {256u, 512u, 1024u, 4096u, 8192u}) {
        CircleScanOptions o;
        o.resolution = m;
        const std::size_t c = circle_fiber_points(f, t, r, o).points.size();
        CHECK(c >= prev);
        prev = c;
      }
    }
  }
}

TEST_CASE("circle scan: tangency is reported once and marks the set incomplete") {
  const Polynomial f = parse_polynomial("y", 2);
  const FiberPointSet s = circle_fiber_points(f, 1.0, 1.0);
  REQUIRE(s.points.size() == 1);
  CHECK(s.points[0].tangency);
  CHECK_FALSE(s.complete);
  CHECK(std::abs(s.points[0].x[1] - 1.0) <= 1e-9);
}

TEST_CASE("circle scan: a circle inside the fiber is not enumerated") {
  const FiberPointSet s = circle_fiber_points(parse_polynomial("x^2 + y^2", 2), 4.0, 2.0);
  CHECK_FALSE(s.complete);
  CHECK(s.points.empty());
}

TEST_CASE("circle scan: bad arguments") {
  const Polynomial f = parse_polynomial("x", 2);
  CHECK_THROWS_AS(circle_fiber_points(f, 0, -1), std::invalid_argument);
  CircleScanOptions o;
  o.resolution = 8;
  CHECK_THROWS_AS(circle_fiber_points(f, 0, 1, o), std::invalid_argument);
  CHECK_THROWS_AS(circle_fiber_points(parse_polynomial("x", 3), 0, 1), std::invalid_argument);
}

TEST_CASE("newton_project: converges, fixed point, inconsistent constraints") {
  const DifferentiablePolynomial f(parse_polynomial("x", 2));
  const double x0[2] = {0.1, 0.99};
  const Projection p = newton_project(f, 0.0, 1.0, x0);
  CHECK(std::abs(p.x[0]) <= 1e-12);
  CHECK(std::abs(p.x[1] - 1.0) <= 1e-12);

  const double on[2] = {0.0, 1.0};
  const Projection q = newton_project(f, 0.0, 1.0, on);
  CHECK(q.iterations == 0);
  CHECK(q.x == Vector{0.0, 1.0});

  const DifferentiablePolynomial circ(parse_polynomial("x^2 + y^2", 2));
  const double z0[2] = {1.0, 0.5};
  CHECK_THROWS_AS(newton_project(circ, 1.0, 2.0, z0), NonConvergence);
}

TEST_CASE("newton_project: points on a 3-sphere fiber") {
  const DifferentiablePolynomial f(parse_polynomial("x*y + z", 3));
  RngStream rng(4, Stage::kGeneric, 0);
  for (int k = 0; k < 50; ++k) {
    Vector x0 = {rng.normal(), rng.normal(), rng.normal()};
    const double s = 3.0 / norm(x0);
    for (auto& c : x0) c *= s;
    try {
      const Projection p = newton_project(f, 0.5, 3.0, x0);
      CHECK(std::abs(f.value(p.x) - 0.5) <= 1e-10 * std::max(1.0, f.function().magnitude(p.x)));
      CHECK(std::abs(norm(p.x) - 3.0) <= 1e-11);
    } catch (const NonConvergence&) {
      // allowed: the starting point may be far from the set
    }
  }
}

TEST_CASE("slab_sample: retained fraction near |cos th| < 0.1") {
  const DifferentiablePolynomial f(parse_polynomial("x", 2));
  RngStream rng(21, Stage::kGeneric, 0);
  const std::size_t n = 100000;
  const SlabSample s = slab_sample(f, 0.0, 1.0, 0.1, n, rng);
  const double p = 2.0 * (2.0 * std::asin(0.1)) / (2.0 * std::numbers::pi);  // exact arc fraction
  const double frac = static_cast<double>(s.draws.size()) / n;
  CHECK(std::abs(frac - p) <= 3.0 * std::sqrt(p * (1 - p) / n));
  CHECK(std::abs(p - 0.0637) <= 1e-3);
  CHECK(s.n_total == n);
  for (const auto& d : s.draws) {
    CHECK(std::abs(d.f_value) < 0.1);
    CHECK(std::abs(norm(d.x) - 1.0) <= 1e-12);
  }
}

TEST_CASE("slab_sample: huge delta keeps every draw; ball mode stays inside") {
  const DifferentiablePolynomial f(parse_polynomial("x*y", 2));
  RngStream rng(22, Stage::kGeneric, 0);
  CHECK(slab_sample(f, 0.0, 2.0, 1e300, 5000, rng).draws.size() == 5000);
  RngStream rng2(22, Stage::kGeneric, 1);
  const SlabSample b = slab_sample(f, 0.0, 2.0, 1e300, 5000, rng2, SlabMode::kBall);
  CHECK(b.draws.size() == 5000);
  for (const auto& d : b.draws) CHECK(norm(d.x) <= 2.0);
}

TEST_CASE("slab_sample: same stream, same sample") {
  const DifferentiablePolynomial f(parse_polynomial("x + y*z", 3));
  RngStream a(5, Stage::kDensity, 9), b(5, Stage::kDensity, 9);
  const SlabSample s1 = slab_sample(f, 0.3, 2.0, 0.2, 20000, a);
  const SlabSample s2 = slab_sample(f, 0.3, 2.0, 0.2, 20000, b);
  REQUIRE(s1.draws.size() == s2.draws.size());
  for (std::size_t i = 0; i < s1.draws.size(); ++i) CHECK(s1.draws[i].x == s2.draws[i].x);
}

TEST_CASE("sphere_fiber_points: projected points satisfy the invariants") {
  const Polynomial f = parse_polynomial("x", 3);
  const DifferentiablePolynomial df(f);
  RngStream rng(7, Stage::kGeneric, 0);
  const FiberPointSet s = sphere_fiber_points(df, 0.0, 5.0, 0.1, 2000, rng);
  CHECK_FALSE(s.complete);
  CHECK(s.points.size() > 10);
  check_invariants(f, s);
}
