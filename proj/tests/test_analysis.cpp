#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "densinf/analysis.hpp"
#include "densinf/geometry.hpp"

using namespace densinf;

namespace {

Polynomial P(const char* s) { return parse_polynomial(s, 2); }

std::vector<double> grid(double lo, double hi, int count) {
  std::vector<double> g;
  for (int i = 0; i < count; ++i) g.push_back((lo * (count - 1 - i) + hi * i) / (count - 1));
  return g;
}

DensityEstimate exact(double theta) {
  DensityEstimate e;
  e.theta = theta;
  return e;
}

const std::vector<double> kRugosityRadii = {2, 4, 8, 16, 32, 64, 128, 256};

}  // namespace

TEST_CASE("density_profile: examples") {
  const ProfileConfig cfg;
  for (const auto& e : density_profile(P("x*y"), std::vector<double>{0.5, 1, 1.5, 2}, cfg)) {
    CHECK(e.theta == 2.0);
    CHECK_FALSE(e.flagged);
  }
  for (const auto& e : density_profile(P("x"), std::vector<double>{-1, 0, 1}, cfg)) CHECK(e.theta == 1.0);

  const auto g = grid(-0.2, 0.2, 9);
  CHECK(g[4] == 0.0);
  const auto prof = density_profile(P("x + x^2*y"), g, cfg);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CAPTURE(g[i]);
    CHECK(prof[i].theta == (i == 4 ? 3.0 : 2.0));
  }
}

TEST_CASE("density_profile: a bounded fiber has density 0") {
  const auto prof = density_profile(P("x^2 + y^2"), std::vector<double>{1.0, 4.0}, ProfileConfig{});
  for (const auto& e : prof) CHECK(e.theta == 0.0);
}

TEST_CASE("density_profile: the grid must increase") {
  CHECK_THROWS_AS(density_profile(P("x"), std::vector<double>{1, 0}, ProfileConfig{}), std::invalid_argument);
}

TEST_CASE("lipschitz_report: constant profile") {
  const auto g = grid(0, 1, 5);
  const std::vector<DensityEstimate> th(5, exact(2.0));
  const LipschitzReport r = lipschitz_report(g, th, 0.5);
  CHECK(r.moduli.size() == g.size() - 1);
  for (double m : r.moduli) CHECK(m == 0.0);
  CHECK(r.discontinuities.empty());
  REQUIRE(r.max_modulus_per_interval.size() == 1);
  CHECK(r.max_modulus_per_interval[0].max_modulus == 0.0);
  CHECK(r.verdict.find("consistent") != std::string::npos);
}

TEST_CASE("lipschitz_report: needs three grid points") {
  const std::vector<double> g = {0, 1};
  const std::vector<DensityEstimate> th(2, exact(1.0));
  CHECK_THROWS_AS(lipschitz_report(g, th, 0.5), std::invalid_argument);
}

TEST_CASE("lipschitz_report: Broughton jump at 0 localised by refinement") {
  const Polynomial f = P("x + x^2*y");
  const ProfileConfig cfg;
  const auto g = grid(-0.2, 0.2, 9);
  const auto prof = density_profile(f, g, cfg);
  const LipschitzReport r = lipschitz_report(g, prof, 0.5, std::vector<double>{0.0},
                                             [&](double t) { return estimate_theta(f, t, cfg); });
  REQUIRE(r.discontinuities.size() == 1);
  const Discontinuity& d = r.discontinuities.front();
  CHECK(d.cell_lo <= 0.0);
  CHECK(d.cell_hi >= 0.0);
  CHECK(d.t_location == 0.0);
  CHECK(std::abs(d.jump_size - 1.0) <= 0.05);
  REQUIRE(d.nearest_candidate.has_value());
  CHECK(*d.nearest_candidate == 0.0);
  CHECK(d.jump_size > r.jump_threshold);
  // excising the two cells touching 0 leaves two flat runs
  REQUIRE(r.max_modulus_per_interval.size() == 2);
  for (const auto& s : r.max_modulus_per_interval) CHECK(s.max_modulus == 0.0);
  CHECK(r.verdict.find("discontinuity detected") != std::string::npos);
}

TEST_CASE("lipschitz_report: xy over [0.5, 2] has zero moduli") {
  const auto g = grid(0.5, 2.0, 7);
  const auto prof = density_profile(P("x*y"), g, ProfileConfig{});
  const LipschitzReport r = lipschitz_report(g, prof, 0.5);
  for (double m : r.moduli) CHECK(m == 0.0);
  CHECK(r.discontinuities.empty());
}

TEST_CASE("lipschitz_report: without refinement the coarse cell is reported") {
  const std::vector<double> g = {0, 1, 2, 3};
  const std::vector<DensityEstimate> th = {exact(1), exact(1), exact(2), exact(2)};
  const LipschitzReport r = lipschitz_report(g, th, 0.5);
  REQUIRE(r.discontinuities.size() == 1);
  CHECK(r.discontinuities[0].cell_lo == 1.0);
  CHECK(r.discontinuities[0].cell_hi == 2.0);
  CHECK(r.discontinuities[0].jump_size == 1.0);
  CHECK_FALSE(r.discontinuities[0].nearest_candidate.has_value());
}

TEST_CASE("rugosity_field: line examples") {
  const DifferentiablePolynomial f(P("x"));
  const double x[2] = {10, 0};
  const RugosityField z = rugosity_field(f, x);
  CHECK(z.t == 10.0);
  CHECK(z.u[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(z.u[1] == 0.0);
  CHECK(norm(z.v_tail) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(rugosity_ratio(z, 10.0) == doctest::Approx(0.1).epsilon(1e-14));

  const double origin[2] = {0, 0};
  CHECK_THROWS_AS(rugosity_field(f, origin), DomainError);
  const DifferentiablePolynomial sq(P("x^2 + y^2"));
  CHECK_THROWS_AS(rugosity_field(sq, origin), DomainError);
}

TEST_CASE("rugosity_field: conformal bound |v_tail| |x|^2 |grad f| <= 1") {
  const DifferentiablePolynomial f(P("x + x^2*y - 3*y^3"));
  RngStream rng(8, Stage::kGeneric, 0);
  for (int k = 0; k < 1000; ++k) {
    const double s = std::exp(rng.uniform(-2, 6));
    const double x[2] = {s * rng.normal(), s * rng.normal()};
    const RugosityField z = rugosity_field(f, x);
    const double prod = norm(z.v_tail) * dot(std::span<const double>(x, 2), std::span<const double>(x, 2)) *
                        f.gradient_norm(x);
    CHECK(prod <= 1.0 + 1e-12);
    CHECK(prod >= 1.0 - 1e-12);  // d phi is conformal, so the bound is attained
  }
}

TEST_CASE("rugosity_check: xy on (0.5, 2)") {
  RugosityOptions o;
  o.seed = 11;
  const RugosityReport r = rugosity_check(P("x*y"), 0.5, 2.0, kRugosityRadii, {}, o);
  CHECK_FALSE(r.refused);
  CHECK(std::isfinite(r.fitted_C));
  CHECK(std::isfinite(r.max_ratio));
  REQUIRE(r.per_radius.size() == kRugosityRadii.size());
  double prev = INFINITY;
  for (const auto& s : r.per_radius) {
    if (s.r < 16) continue;
    CHECK(s.max_ratio <= 1.1 * prev);
    prev = s.max_ratio;
  }
}

TEST_CASE("rugosity_check: sample invariants") {
  const Polynomial f = P("x + x^2*y");
  const DifferentiablePolynomial df(f);
  RugosityOptions o;
  o.seed = 12;
  const RugosityReport r = rugosity_check(f, 0.5, 1.5, kRugosityRadii, std::vector<double>{0.0}, o);
  CHECK_FALSE(r.refused);
  CHECK(std::isfinite(r.fitted_C));
  REQUIRE_FALSE(r.pairs.empty());
  for (const auto& p : r.pairs) {
    CHECK(std::abs(f(p.x) - p.t) <= 1e-9 * std::max(1.0, f.magnitude(p.x)));
    CHECK(norm(p.x) > r.eps1);
    CHECK(p.t > 0.5);
    CHECK(p.t < 1.5);
    CHECK(p.t_y > 0.5);
    CHECK(p.t_y < 1.5);
    CHECK(p.distance >= 1.0 / norm(p.x) * (1 - 1e-12));
    CHECK(p.distance >= norm(p.u));
    CHECK(p.conformal_product <= 1.0 + 1e-12);
    CHECK(p.ratio <= r.max_ratio);
  }
  // the pooled 95th percentile sits below the r = 2 peak here, so only a few
  // percent of the pairs may exceed 1.2 C
  std::size_t above = 0;
  for (const auto& p : r.pairs) above += p.ratio > 1.2 * r.fitted_C ? 1 : 0;
  CHECK(above <= r.pairs.size() / 20);
}

TEST_CASE("rugosity_check: xy ratios stay below 1.2 C") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    RugosityOptions o;
    o.seed = seed;
    const RugosityReport r = rugosity_check(P("x*y"), 0.5, 2.0, kRugosityRadii, {}, o);
    REQUIRE_FALSE(r.pairs.empty());
    for (const auto& p : r.pairs) CHECK(p.ratio <= 1.2 * r.fitted_C);
  }
}

TEST_CASE("rugosity_check: interval too close to a candidate is refused") {
  RugosityOptions o;
  o.seed = 13;
  const Polynomial f = P("x + x^2*y");
  const RugosityReport near = rugosity_check(f, 0.001, 0.01, kRugosityRadii, std::vector<double>{0.0}, o);
  CHECK(near.refused);
  CHECK(near.diagnostic.find("candidate") != std::string::npos);
  CHECK_FALSE(near.pairs.empty());
}

TEST_CASE("rugosity_check: ratios grow as I shrinks toward the candidate") {
  // fibers near 0 turn back at |x| ~ 1/(4t), where nu ~ t and the ratio ~ 1/t
  RugosityOptions o;
  o.seed = 14;
  const Polynomial f = P("x + x^2*y");
  const RugosityReport far = rugosity_check(f, 0.5, 1.5, kRugosityRadii, std::vector<double>{0.0}, o);
  const RugosityReport near = rugosity_check(f, 0.05, 0.15, kRugosityRadii, std::vector<double>{0.0}, o);
  CHECK_FALSE(far.refused);
  CHECK(near.refused);
  CHECK(near.max_ratio >= 10.0 * far.max_ratio);
}

TEST_CASE("rugosity_check: preconditions") {
  CHECK_THROWS_AS(rugosity_check(P("x"), 1.0, 0.5, kRugosityRadii), std::invalid_argument);
  CHECK_THROWS_AS(rugosity_check(P("x"), 0.5, 1.0, std::vector<double>{4, 2}), std::invalid_argument);
}

TEST_CASE("tangent projection tends to 1 along unbounded branches at r = 1000") {
  for (const char* src : {"x", "x*y", "x + x^2*y"}) {
    const Polynomial f = P(src);
    for (double t : {-1.0, 0.5, 2.0}) {
      CAPTURE(src);
      CAPTURE(t);
      const FiberPointSet s = circle_fiber_points(f, t, 1000.0);
      REQUIRE_FALSE(s.points.empty());
      for (const auto& p : s.points) CHECK(tangent_projection_norm(f, p.x) > 0.99);
    }
  }
}
