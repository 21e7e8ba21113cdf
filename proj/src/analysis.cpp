#include "densinf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "densinf/geometry.hpp"
#include "densinf/rng.hpp"

namespace densinf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_increasing(std::span<const double> xs, const char* what) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw std::invalid_argument(std::string(what) + " must be strictly increasing");
  }
}

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

DensityCurve density_curve(const Polynomial& f, double t, const ProfileConfig& cfg) {
  switch (cfg.method) {
    case DensityMethod::kSphereCount:
      return sphere_count_density(f, t, cfg.radii, cfg.scan);
    case DensityMethod::kSphereCoarea:
      return coarea_density_curve(f, t, cfg.radii, SlabMode::kSphere, cfg.coarea, cfg.seed);
    case DensityMethod::kBallCoarea:
      return coarea_density_curve(f, t, cfg.radii, SlabMode::kBall, cfg.coarea, cfg.seed);
    case DensityMethod::kInversion:
      return inversion_density(f, t, cfg.radii, OriginDensityOptions{cfg.scan, cfg.coarea, cfg.seed});
  }
  throw std::invalid_argument("density_curve: unknown method");
}

DensityEstimate estimate_theta(const Polynomial& f, double t, const ProfileConfig& cfg) {
  try {
    return extrapolate_limit(density_curve(f, t, cfg));
  } catch (const std::exception& e) {
    DensityEstimate est;
    est.flagged = true;
    est.note = std::string("failed: ") + e.what();
    return est;
  }
}

std::vector<DensityEstimate> density_profile(const Polynomial& f, std::span<const double> t_grid,
                                             const ProfileConfig& cfg) {
  require_increasing(t_grid, "density_profile: t grid");
  std::vector<DensityEstimate> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) out.push_back(estimate_theta(f, t, cfg));
  return out;
}

LipschitzReport lipschitz_report(std::span<const double> t_grid,
                                 std::span<const DensityEstimate> theta, double jump_threshold,
                                 std::span<const double> candidates, const ThetaFn& refine) {
  if (t_grid.size() < 3) throw std::invalid_argument("lipschitz_report: need >= 3 grid points");
  if (theta.size() != t_grid.size()) throw std::invalid_argument("lipschitz_report: size mismatch");
  require_increasing(t_grid, "lipschitz_report: t grid");

  LipschitzReport rep;
  rep.t_grid.assign(t_grid.begin(), t_grid.end());
  rep.theta.assign(theta.begin(), theta.end());
  rep.jump_threshold = jump_threshold;
  const std::size_t cells = t_grid.size() - 1;
  for (std::size_t i = 0; i < cells; ++i) {
    rep.moduli.push_back(std::abs(theta[i + 1].theta - theta[i].theta) / (t_grid[i + 1] - t_grid[i]));
  }

  struct Cell {
    double lo, hi, jump;
  };
  std::vector<Cell> jumping;
  for (std::size_t i = 0; i < cells; ++i) {
    const double lo = t_grid[i], hi = t_grid[i + 1];
    if (!(std::abs(theta[i + 1].theta - theta[i].theta) > jump_threshold)) continue;
    if (!refine) {
      jumping.push_back({lo, hi, std::abs(theta[i + 1].theta - theta[i].theta)});
      continue;
    }
    double ts[5], vs[5];
    for (int k = 0; k < 5; ++k) ts[k] = lo + (hi - lo) * k / 4.0;
    ts[4] = hi;
    vs[0] = theta[i].theta;
    vs[4] = theta[i + 1].theta;
    for (int k = 1; k < 4; ++k) vs[k] = refine(ts[k]).theta;
    for (int k = 0; k < 4; ++k) {
      const double d = std::abs(vs[k + 1] - vs[k]);
      if (d > jump_threshold) jumping.push_back({ts[k], ts[k + 1], d});
    }
  }

  for (std::size_t i = 0; i < jumping.size();) {
    Discontinuity d{0.0, jumping[i].lo, jumping[i].hi, jumping[i].jump, std::nullopt};
    std::size_t j = i + 1;
    while (j < jumping.size() && jumping[j].lo == d.cell_hi) {
      d.cell_hi = jumping[j].hi;
      d.jump_size = std::max(d.jump_size, jumping[j].jump);
      ++j;
    }
    // two merged cells: the jump sits on their shared endpoint
    d.t_location = j - i == 2 ? jumping[i].hi : 0.5 * (d.cell_lo + d.cell_hi);
    for (double c : candidates) {
      if (!d.nearest_candidate ||
          std::abs(c - d.t_location) < std::abs(*d.nearest_candidate - d.t_location)) {
        d.nearest_candidate = c;
      }
    }
    rep.discontinuities.push_back(d);
    i = j;
  }

  // maximal runs of cells free of candidates
  std::optional<SubintervalModulus> run;
  for (std::size_t i = 0; i < cells; ++i) {
    const double lo = t_grid[i], hi = t_grid[i + 1];
    const bool excised = std::any_of(candidates.begin(), candidates.end(),
                                     [&](double c) { return c >= lo && c <= hi; });
    if (excised) {
      if (run) rep.max_modulus_per_interval.push_back(*run);
      run.reset();
      continue;
    }
    if (!run) run = SubintervalModulus{lo, hi, 0.0};
    run->hi = hi;
    run->max_modulus = std::max(run->max_modulus, rep.moduli[i]);
  }
  if (run) rep.max_modulus_per_interval.push_back(*run);

  if (rep.discontinuities.empty()) {
    rep.verdict = "consistent with locally Lipschitz: no jump above threshold on the grid";
  } else {
    std::string v = "discontinuity detected at";
    bool all_at_candidates = true;
    for (std::size_t i = 0; i < rep.discontinuities.size(); ++i) {
      const auto& d = rep.discontinuities[i];
      v += (i ? ", t = " : " t = ") + format_number(d.t_location) + " (jump " +
           format_number(d.jump_size) + ")";
      const bool near = d.nearest_candidate && *d.nearest_candidate >= d.cell_lo - (d.cell_hi - d.cell_lo) &&
                        *d.nearest_candidate <= d.cell_hi + (d.cell_hi - d.cell_lo);
      all_at_candidates = all_at_candidates && near;
    }
    v += all_at_candidates ? "; every jump sits at a K-infinity candidate"
                           : "; some jump is away from every K-infinity candidate";
    rep.verdict = v;
  }
  return rep;
}

RugosityField rugosity_field(const DifferentiablePolynomial& f, std::span<const double> x) {
  const Vector g = f.gradient(x);
  const double g2 = dot(g, g);
  if (!(g2 > 0.0)) throw DomainError("rugosity_field: gradient vanishes");
  Vector w(g);
  for (auto& c : w) c /= g2;
  RugosityField z;
  z.t = f.value(x);
  z.u = invert(x);
  z.v_tail = apply_inversion_jacobian(x, w);
  return z;
}

double rugosity_ratio(const RugosityField& z, double t_y) {
  const double dt = z.t - t_y;
  return norm(z.v_tail) / std::sqrt(dt * dt + dot(z.u, z.u));
}

RugosityReport rugosity_check(const Polynomial& f, double a, double b,
                              std::span<const double> radii, std::span<const double> candidates,
                              const RugosityOptions& opts) {
  if (f.nvars() != 2) throw std::invalid_argument("rugosity_check: needs n = 2");
  if (!(a < b)) throw std::invalid_argument("rugosity_check: need a < b");
  if (radii.empty() || !(radii.front() > 0.0)) throw std::invalid_argument("rugosity_check: bad radii");
  require_increasing(radii, "rugosity_check: radii");

  RugosityReport rep;
  rep.a = a;
  rep.b = b;
  for (double c : candidates) {
    if (c > a - opts.margin && c < b + opts.margin) {
      rep.refused = true;
      rep.diagnostic = "interval (" + format_number(a) + ", " + format_number(b) +
                       ") is within margin " + format_number(opts.margin) +
                       " of K-infinity candidate " + format_number(c) +
                       "; ratios below are diagnostic only";
      break;
    }
  }

  double s1 = 1.0;
  for (const auto& c : critical_points(f, opts.sigma_box)) {
    const double fc = f(c);
    if (fc >= a && fc <= b) s1 = std::max(s1, 1.0 + norm(c));
  }
  rep.eps1 = 1.1 * s1;

  const DifferentiablePolynomial df(f);
  std::vector<double> ratios;
  for (std::size_t j = 0; j < radii.size(); ++j) {
    const double r = radii[j];
    RugosityRadius stat{r, 0, 0.0};
    if (r > rep.eps1) {
      RngStream rng(opts.seed, Stage::kRugosity, task_id(r, j));
      for (std::size_t attempt = 0;
           stat.pairs < opts.pairs_per_radius && attempt < 4 * opts.pairs_per_radius; ++attempt) {
        const double t = rng.uniform(a, b);
        const FiberPointSet fib = circle_fiber_points(f, t, r, opts.scan);
        for (const auto& p : fib.points) {
          if (stat.pairs >= opts.pairs_per_radius) break;
          // y near z: |t_y - t| <= |u| keeps |z - y| comparable to the distance to Y
          const double reach = 1.0 / r;
          const double t_y = rng.uniform(std::max(a, t - reach), std::min(b, t + reach));
          if (!(p.grad_norm > 0.0)) continue;
          const RugosityField z = rugosity_field(df, p.x);
          RugosityPair pr;
          pr.r = r;
          pr.t = t;
          pr.x = p.x;
          pr.u = z.u;
          pr.t_y = t_y;
          pr.v_tail_norm = norm(z.v_tail);
          const double dt = z.t - t_y;
          pr.distance = std::sqrt(dt * dt + dot(z.u, z.u));
          pr.ratio = pr.v_tail_norm / pr.distance;
          pr.conformal_product = pr.v_tail_norm * dot(p.x, p.x) * p.grad_norm;
          stat.max_ratio = std::max(stat.max_ratio, pr.ratio);
          ratios.push_back(pr.ratio);
          rep.pairs.push_back(std::move(pr));
          ++stat.pairs;
        }
      }
    }
    rep.per_radius.push_back(stat);
  }

  if (ratios.empty()) {
    rep.max_ratio = kNaN;
    rep.fitted_C = kNaN;
    if (rep.diagnostic.empty()) rep.diagnostic = "no fiber point beyond eps1 on the given radii";
    return rep;
  }
  std::sort(ratios.begin(), ratios.end());
  rep.max_ratio = ratios.back();
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(ratios.size())));
  rep.fitted_C = ratios[std::max<std::size_t>(rank, 1) - 1];
  if (rep.refused) {
    const RugosityRadius& peak = *std::max_element(
        rep.per_radius.begin(), rep.per_radius.end(),
        [](const RugosityRadius& x, const RugosityRadius& y) { return x.max_ratio < y.max_ratio; });
    rep.diagnostic += "; max ratio " + format_number(rep.max_ratio) + " at r = " + format_number(peak.r);
  }
  return rep;
}

}  // namespace densinf
