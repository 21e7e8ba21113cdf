#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>

#include "densinf/geometry.hpp"
#include "densinf/run.hpp"

namespace densinf {

namespace {

struct Check {
  std::string name;
  bool passed = true;
  Json measured = Json::object();
};

using Clock = std::chrono::steady_clock;

const std::vector<double> kRadii = {8, 16, 32, 64, 128, 256};

Json theta_check(Check& c, const Polynomial& f, std::span<const double> ts, std::span<const double> expect) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const DensityCurve curve = sphere_count_density(f, ts[i], kRadii);
    const DensityEstimate e = extrapolate_limit(curve);
    const bool ok = e.theta == expect[i];
    c.passed = c.passed && ok;
    rows.push_back({{"t", number(ts[i])}, {"theta", number(e.theta)}, {"expected", number(expect[i])}});
  }
  return rows;
}

Check line_density() {
  Check c{"line_density_count_and_inversion"};
  const Polynomial f = parse_polynomial("x", 2);
  const std::vector<double> ts = {-1, 0, 2}, ones = {1, 1, 1};
  c.measured["sphere_count"] = theta_check(c, f, ts, ones);
  Json inv = Json::array();
  for (double t : ts) {
    const DensityEstimate e = extrapolate_limit(inversion_density(f, t, kRadii));
    c.passed = c.passed && e.theta == 1.0;
    inv.push_back(number(e.theta));
  }
  c.measured["inversion"] = std::move(inv);
  return c;
}

Check hyperbola_density() {
  Check c{"hyperbola_counts"};
  const Polynomial f = parse_polynomial("x*y", 2);
  std::size_t bad = 0;
  for (double t : {-5.0, -1.0, 0.0, 1.0, 5.0}) {
    for (const auto& s : sphere_count_density(f, t, kRadii).samples) {
      if (s.value != 2.0 || !s.reliable) ++bad;
    }
  }
  c.passed = bad == 0;
  c.measured["samples_not_equal_2"] = bad;
  return c;
}

Check kinf_check(const std::string& name, const std::string& src, bool expect_candidate) {
  Check c{name};
  const KinfResult res = detect_kinf(parse_polynomial(src, 2), kRadii);
  c.measured["n_candidates"] = res.candidates.size();
  c.measured["envelope_slope"] = number(res.envelope_slope);
  if (!expect_candidate) {
    c.passed = res.candidates.empty() && std::abs(res.envelope_slope - 2.0) <= 0.05;
  } else {
    c.passed = res.candidates.size() == 1;
    if (c.passed) {
      const auto& k = res.candidates.front();
      c.measured["value"] = number(k.value);
      c.measured["decay_slope"] = number(k.decay_slope);
      c.passed = std::abs(k.value) < k.bin_width && std::abs(k.decay_slope + 1.0) <= 0.2;
    }
  }
  return c;
}

Check broughton_density() {
  Check c{"broughton_density"};
  const Polynomial f = parse_polynomial("x + x^2*y", 2);
  const std::vector<double> ts = {-1, -0.5, -0.1, 0, 0.1, 0.5, 1};
  const std::vector<double> expect = {2, 2, 2, 3, 2, 2, 2};
  c.measured["theta"] = theta_check(c, f, ts, expect);
  return c;
}

Check broughton_lipschitz() {
  Check c{"broughton_lipschitz"};
  const Polynomial f = parse_polynomial("x + x^2*y", 2);
  std::vector<double> grid;
  for (int i = -4; i <= 4; ++i) grid.push_back(0.05 * i);
  const ProfileConfig cfg;
  const auto prof = density_profile(f, grid, cfg);
  const std::vector<double> cands = {0.0};
  const LipschitzReport rep =
      lipschitz_report(grid, prof, 0.5, cands, [&](double t) { return estimate_theta(f, t, cfg); });
  c.measured["n_discontinuities"] = rep.discontinuities.size();
  c.passed = rep.discontinuities.size() == 1;
  if (c.passed) {
    const auto& d = rep.discontinuities.front();
    c.measured["t_location"] = number(d.t_location);
    c.measured["jump_size"] = number(d.jump_size);
    c.passed = d.cell_lo <= 0.0 && d.cell_hi >= 0.0 && std::abs(d.jump_size - 1.0) <= 0.05;
  }
  return c;
}

Check inversion_equivalence() {
  Check c{"count_inversion_equivalence"};
  struct Case {
    const char* src;
    std::vector<double> ts;
  };
  const std::vector<Case> cases = {{"x", {-1, 0, 2}},
                                   {"x*y", {-5, -1, 0, 1, 5}},
                                   {"x + x^2*y", {-1, -0.5, -0.1, 0, 0.1, 0.5, 1}}};
  std::size_t compared = 0, mismatched = 0;
  for (const auto& k : cases) {
    const Polynomial f = parse_polynomial(k.src, 2);
    for (double t : k.ts) {
      const auto a = sphere_count_density(f, t, kRadii);
      const auto b = inversion_density(f, t, kRadii);
      for (std::size_t j = 0; j < kRadii.size(); ++j) {
        ++compared;
        if (a.samples[j].value != b.samples[j].value) ++mismatched;
      }
    }
  }
  c.passed = mismatched == 0;
  c.measured["compared"] = compared;
  c.measured["mismatched"] = mismatched;
  return c;
}

Check arc_scaling() {
  Check c{"inversion_arc_length_scaling"};
  double worst = 0.0;
  for (double r : {2.0, 10.0, 100.0}) {
    constexpr int kSegments = 20000;
    double len = 0.0, len_img = 0.0;
    Vector prev = {r, 0.0}, prev_img = invert(prev);
    for (int k = 1; k <= kSegments; ++k) {
      const double th = 0.5 * std::numbers::pi * k / kSegments;
      const Vector p = {r * std::cos(th), r * std::sin(th)};
      const Vector q = invert(p);
      len += std::hypot(p[0] - prev[0], p[1] - prev[1]);
      len_img += std::hypot(q[0] - prev_img[0], q[1] - prev_img[1]);
      prev = p;
      prev_img = q;
    }
    worst = std::max(worst, std::abs(len_img / (len / (r * r)) - 1.0));
  }
  c.passed = worst <= 1e-6;
  c.measured["max_relative_error"] = number(worst);
  return c;
}

Check conformality(std::uint64_t seed) {
  Check c{"inversion_conformality"};
  double worst = 0.0;
  for (std::size_t n : {2u, 3u}) {
    RngStream rng(seed, Stage::kVerify, n);
    for (int k = 0; k < 1000; ++k) {
      Vector x(n);
      const double scale = std::exp(rng.uniform(-3.0, 3.0));
      for (auto& v : x) v = scale * rng.normal();
      const JacobianMatrix j = inversion_jacobian(x);
      const double n4 = std::pow(dot(x, x), 2);
      // J^T J = |x|^-4 I  <=>  every singular value is |x|^-2
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
          double s = 0.0;
          for (std::size_t m = 0; m < n; ++m) s += j(m, a) * j(m, b);
          worst = std::max(worst, std::abs(s * n4 - (a == b ? 1.0 : 0.0)));
        }
      }
    }
  }
  c.passed = worst <= 1e-10;
  c.measured["max_deviation"] = number(worst);
  return c;
}

Check rugosity_hyperbola(std::uint64_t seed) {
  Check c{"rugosity_hyperbola"};
  RugosityOptions opts;
  opts.pairs_per_radius = 50;
  opts.seed = seed;
  const std::vector<double> radii = {2, 4, 8, 16, 32, 64, 128, 256};
  const RugosityReport rep = rugosity_check(parse_polynomial("x*y", 2), 0.5, 2.0, radii, {}, opts);
  bool monotone = true;
  double conformal = 0.0;
  for (std::size_t j = 1; j < rep.per_radius.size(); ++j) {
    if (rep.per_radius[j].r > 16 && rep.per_radius[j].max_ratio > 1.1 * rep.per_radius[j - 1].max_ratio) monotone = false;
  }
  for (const auto& p : rep.pairs) conformal = std::max(conformal, p.conformal_product);
  c.passed = monotone && std::isfinite(rep.fitted_C) && !rep.refused && conformal <= 1.0 + 1e-12;
  c.measured["fitted_C"] = number(rep.fitted_C);
  c.measured["max_ratio"] = number(rep.max_ratio);
  c.measured["max_conformal_product"] = number(conformal);
  return c;
}

Check coarea_n3(std::uint64_t seed) {
  Check c{"coarea_n3_plane"};
  const DifferentiablePolynomial f(parse_polynomial("x", 3));
  CoareaBudget budget;
  budget.samples = 1000000;
  const CoareaResult at0 =
      coarea_with_budget(f, 0.0, 10.0, SlabMode::kSphere, budget, RngStream(seed, Stage::kVerify, 10).id());
  budget.delta = 0.02;
  const CoareaResult slice =
      coarea_with_budget(f, 9.9, 10.0, SlabMode::kSphere, budget, RngStream(seed, Stage::kVerify, 11).id());
  c.passed = std::abs(at0.value - 1.0) <= 0.05 && std::abs(slice.value - 0.141) <= 0.01;
  c.measured["theta_t0"] = number(at0.value);
  c.measured["theta_t0_stderr"] = number(at0.stderr_);
  c.measured["slice_t9_9"] = number(slice.value);
  c.measured["slice_t9_9_stderr"] = number(slice.stderr_);
  return c;
}

}  // namespace

RunReport run_verify(std::uint64_t seed) {
  RunReport rep;
  rep.version = artifact_version();
  rep.subcommand = "verify";
  rep.config = {{"subcommand", "verify"}, {"seed", seed}};

  const std::vector<std::function<Check()>> suite = {
      line_density,
      hyperbola_density,
      [] { return kinf_check("hyperbola_no_kinf", "x*y", false); },
      broughton_density,
      [] { return kinf_check("broughton_kinf", "x + x^2*y", true); },
      broughton_lipschitz,
      inversion_equivalence,
      arc_scaling,
      [seed] { return conformality(seed); },
      [seed] { return rugosity_hyperbola(seed); },
      [seed] { return coarea_n3(seed); },
  };

  Json checks = Json::array();
  Table table{"verify_checks", {"index", "passed"}, {}};
  bool all = true;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto t0 = Clock::now();
    Check c;
    try {
      c = suite[i]();
    } catch (const std::exception& e) {
      c.name = "check_" + std::to_string(i);
      c.passed = false;
      c.measured["error"] = e.what();
    }
    rep.timings[c.name] = std::chrono::duration<double>(Clock::now() - t0).count();
    all = all && c.passed;
    table.rows.push_back({static_cast<double>(i), c.passed ? 1.0 : 0.0});
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"measured", std::move(c.measured)}});
  }
  rep.stages["verify"] = {{"all_passed", all}, {"checks", std::move(checks)}};
  rep.tables.push_back(std::move(table));
  if (!all) {
    rep.status = "failed";
    rep.error = "verify: at least one invariant check failed";
  }
  return rep;
}

}  // namespace densinf
