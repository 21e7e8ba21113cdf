#include "densinf/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "densinf/geometry.hpp"

namespace densinf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CoareaResult coarea_from_slab(const SlabSample& slab, double scale, bool tangential) {
  if (slab.draws.empty()) {
    throw EstimationError("co-area estimate: no draw within delta = " +
                          std::to_string(slab.half_width) + " of level t");
  }
  double sum = 0.0, sum2 = 0.0;
  for (const auto& d : slab.draws) {
    const double w = tangential ? d.tangential_grad_norm : d.grad_norm;
    sum += w;
    sum2 += w * w;
  }
  const double n = static_cast<double>(slab.n_total);
  const double mean = sum / n;
  const double var = n > 1.0 ? std::max(0.0, (sum2 / n - mean * mean) * n / (n - 1.0)) : 0.0;
  return {scale * mean, scale * std::sqrt(var / n), slab.half_width, slab.draws.size()};
}

double sphere_scale(std::size_t n, double r, double delta) {
  // vol(S^{n-1}_r) / (2 delta) / vol_{n-2}(S^{n-2}_r)
  return unit_sphere_volume(n - 1) * r / (2.0 * delta * unit_sphere_volume(n - 2));
}

double ball_scale(std::size_t n, double r, double delta) {
  // vol(B^n_r) / (2 delta) / vol_{n-1}(B^{n-1}_r)
  return unit_ball_volume(n) * r / (2.0 * delta * unit_ball_volume(n - 1));
}

struct LinearFit {
  double theta = 0.0;
  double c = 0.0;  // coefficient of the normalised basis q = (r_ref / r)^alpha
  double sse = kInf;
  double var_theta = kInf;  // (X^T W X)^{-1}_{00}
};

LinearFit fit_fixed_alpha(std::span<const double> rr, std::span<const double> v,
                          std::span<const double> w, double r_ref, double alpha) {
  double s0 = 0, s1 = 0, s2 = 0, b0 = 0, b1 = 0;
  for (std::size_t j = 0; j < rr.size(); ++j) {
    const double q = std::pow(r_ref / rr[j], alpha);
    s0 += w[j];
    s1 += w[j] * q;
    s2 += w[j] * q * q;
    b0 += w[j] * v[j];
    b1 += w[j] * q * v[j];
  }
  const double det = s0 * s2 - s1 * s1;
  LinearFit fit;
  if (!(det > 1e-300) || !(det > 1e-14 * s0 * s2)) return fit;
  fit.theta = (s2 * b0 - s1 * b1) / det;
  fit.c = (s0 * b1 - s1 * b0) / det;
  fit.var_theta = s2 / det;
  double sse = 0.0;
  for (std::size_t j = 0; j < rr.size(); ++j) {
    const double q = std::pow(r_ref / rr[j], alpha);
    const double e = v[j] - fit.theta - fit.c * q;
    sse += w[j] * e * e;
  }
  fit.sse = sse;
  return fit;
}

}  // namespace

std::string to_string(DensityMethod m) {
  switch (m) {
    case DensityMethod::kSphereCount: return "sphere_count";
    case DensityMethod::kSphereCoarea: return "sphere_coarea";
    case DensityMethod::kBallCoarea: return "ball_coarea";
    case DensityMethod::kInversion: return "inversion";
  }
  return "unknown";
}

DensityMethod parse_density_method(const std::string& name) {
  if (name == "sphere_count") return DensityMethod::kSphereCount;
  if (name == "sphere_coarea") return DensityMethod::kSphereCoarea;
  if (name == "ball_coarea") return DensityMethod::kBallCoarea;
  if (name == "inversion") return DensityMethod::kInversion;
  throw std::invalid_argument("unknown density method '" + name + "'");
}

std::vector<double> geometric_radii(double r0, std::size_t count, double ratio) {
  if (!(r0 > 0.0) || !(ratio > 1.0)) throw std::invalid_argument("geometric_radii: bad schedule");
  std::vector<double> r(count);
  for (std::size_t j = 0; j < count; ++j) r[j] = r0 * std::pow(ratio, static_cast<double>(j));
  return r;
}

DensityCurve sphere_count_density(const Polynomial& f, double t, std::span<const double> radii,
                                  const CircleScanOptions& opts) {
  if (f.nvars() != 2) {
    throw std::invalid_argument("sphere_count_density: needs n = 2, got n = " +
                                std::to_string(f.nvars()));
  }
  DensityCurve curve{t, DensityMethod::kSphereCount, {}};
  for (double r : radii) {
    const FiberPointSet pts = circle_fiber_points(f, t, r, opts);
    curve.samples.push_back({r, 0.5 * static_cast<double>(pts.points.size()), 0.0, pts.complete});
  }
  return curve;
}

CoareaResult sphere_coarea_density(const DifferentiablePolynomial& f, double t, double r,
                                   double delta, std::size_t n, RngStream& rng) {
  if (f.nvars() < 2) throw std::invalid_argument("sphere_coarea_density: needs n >= 2");
  const SlabSample slab = slab_sample(f, t, r, delta, n, rng, SlabMode::kSphere);
  return coarea_from_slab(slab, sphere_scale(f.nvars(), r, delta), true);
}

CoareaResult ball_coarea_density(const DifferentiablePolynomial& f, double t, double r,
                                 double delta, std::size_t n, RngStream& rng) {
  if (f.nvars() < 2) throw std::invalid_argument("ball_coarea_density: needs n >= 2");
  const SlabSample slab = slab_sample(f, t, r, delta, n, rng, SlabMode::kBall);
  return coarea_from_slab(slab, ball_scale(f.nvars(), r, delta), false);
}

CoareaResult coarea_with_budget(const DifferentiablePolynomial& f, double t, double r,
                                SlabMode mode, const CoareaBudget& budget,
                                std::uint64_t stream_key) {
  double delta = budget.delta.value_or(0.05 * (1.0 + std::abs(t)));
  for (int attempt = 0;; ++attempt) {
    RngStream rng(stream_key);
    const SlabSample slab = slab_sample(f, t, r, delta, budget.samples, rng, mode);
    const bool last = budget.delta.has_value() || attempt >= budget.max_doublings;
    if (slab.draws.size() >= budget.min_retained || last) {
      const double scale = mode == SlabMode::kSphere ? sphere_scale(f.nvars(), r, delta)
                                                     : ball_scale(f.nvars(), r, delta);
      return coarea_from_slab(slab, scale, mode == SlabMode::kSphere);
    }
    delta *= 2.0;
  }
}

DensityCurve coarea_density_curve(const Polynomial& f, double t, std::span<const double> radii,
                                  SlabMode mode, const CoareaBudget& budget, std::uint64_t seed,
                                  Stage stage) {
  const DifferentiablePolynomial df(f);
  DensityCurve curve{t, mode == SlabMode::kSphere ? DensityMethod::kSphereCoarea
                                                  : DensityMethod::kBallCoarea,
                     {}};
  for (std::size_t j = 0; j < radii.size(); ++j) {
    const RngStream key(seed, stage, task_id(t, j));
    try {
      const CoareaResult res = coarea_with_budget(df, t, radii[j], mode, budget, key.id());
      curve.samples.push_back({radii[j], res.value, res.stderr_, true});
    } catch (const EstimationError&) {
      curve.samples.push_back({radii[j], 0.0, 0.0, false});
    }
  }
  return curve;
}

DensityCurve density_at_origin(const Polynomial& g, std::span<const double> rhos,
                               const OriginDensityOptions& opts, std::string* warning) {
  const std::size_t n = g.nvars();
  DensityCurve curve{0.0, DensityMethod::kInversion, {}};
  const Vector origin(n, 0.0);
  if (g(origin) != 0.0) {
    if (warning) *warning = "G does not vanish at the origin; density there is 0";
    for (double rho : rhos) curve.samples.push_back({rho, 0.0, 0.0, true});
    return curve;
  }
  if (n == 2) {
    for (double rho : rhos) {
      const FiberPointSet pts = circle_fiber_points(g, 0.0, rho, opts.scan);
      curve.samples.push_back({rho, 0.5 * static_cast<double>(pts.points.size()), 0.0,
                               pts.complete});
    }
    return curve;
  }

  const DifferentiablePolynomial dg(g);
  const std::size_t want = std::max<std::size_t>(1, opts.coarea.min_retained);
  for (std::size_t j = 0; j < rhos.size(); ++j) {
    const double rho = rhos[j];
    const RngStream key(opts.seed, Stage::kDensity, task_id(rho, j));
    RngStream probe(key.id());
    const SphereSample s = uniform_sphere_sample(n, rho, opts.coarea.samples, probe);
    std::vector<double> mags;
    mags.reserve(s.points.size());
    for (const auto& p : s.points) mags.push_back(std::abs(g(p)));
    const std::size_t k = std::min(want, mags.size()) - 1;
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(k), mags.end());
    const double delta = std::nextafter(mags[k], kInf);
    if (!(delta > 0.0)) {
      curve.samples.push_back({rho, 0.0, 0.0, false});
      continue;
    }
    RngStream rng(key.id());
    try {
      const CoareaResult res = sphere_coarea_density(dg, 0.0, rho, delta, opts.coarea.samples, rng);
      curve.samples.push_back({rho, res.value, res.stderr_, true});
    } catch (const EstimationError&) {
      curve.samples.push_back({rho, 0.0, 0.0, false});
    }
  }
  return curve;
}

DensityCurve inversion_density(const Polynomial& f, double t, std::span<const double> radii,
                               const OriginDensityOptions& opts) {
  const Polynomial g = invert_fiber_polynomial(f, t);
  std::vector<double> rhos;
  rhos.reserve(radii.size());
  for (double r : radii) {
    if (!(r > 0.0)) throw std::invalid_argument("inversion_density: radii must be positive");
    rhos.push_back(1.0 / r);
  }
  DensityCurve curve = density_at_origin(g, rhos, opts);
  curve.t = t;
  curve.method = DensityMethod::kInversion;
  for (std::size_t j = 0; j < radii.size(); ++j) curve.samples[j].r = radii[j];
  return curve;
}

DensityEstimate extrapolate_limit(const DensityCurve& curve) {
  // effective radius grows toward the limit point
  std::vector<std::pair<double, const DensitySample*>> tail;
  for (const auto& s : curve.samples) {
    if (s.reliable && std::isfinite(s.value)) tail.emplace_back(s.r, &s);
  }
  if (tail.size() < 3) {
    throw EstimationError("extrapolate_limit: need >= 3 reliable samples, have " +
                          std::to_string(tail.size()));
  }
  const bool toward_zero = curve.samples.size() >= 2 &&
                           curve.samples.front().r > curve.samples.back().r;
  for (auto& e : tail) {
    if (toward_zero) e.first = 1.0 / e.first;
  }
  std::sort(tail.begin(), tail.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const std::size_t k = tail.size();
  std::vector<double> rr(k), v(k), se(k);
  for (std::size_t j = 0; j < k; ++j) {
    rr[j] = tail[j].first;
    v[j] = tail[j].second->value;
    se[j] = tail[j].second->stderr_;
  }
  const double last = v[k - 1], prev = v[k - 2];
  const double max_se = *std::max_element(se.begin(), se.end());
  const bool noisy = max_se > 0.0;

  DensityEstimate est;
  est.n_points_used = static_cast<int>(k);

  if (!noisy && last == prev) {
    est.theta = last;
    est.alpha = kInf;
    est.n_points_used = 2;
    est.note = "exact: constant tail";
    return est;
  }

  std::vector<double> w(k, 1.0);
  if (noisy) {
    const double floor = 1e-12 * max_se;
    for (std::size_t j = 0; j < k; ++j) w[j] = 1.0 / std::pow(std::max(se[j], floor), 2);
  }
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  auto chi2_ok = [](double chi2, double dof) {
    return dof <= 0.0 || chi2 <= dof + 3.0 * std::sqrt(2.0 * dof);
  };

  if (noisy) {
    double mean = 0.0;
    for (std::size_t j = 0; j < k; ++j) mean += w[j] * v[j];
    mean /= wsum;
    double chi2 = 0.0;
    for (std::size_t j = 0; j < k; ++j) chi2 += w[j] * (v[j] - mean) * (v[j] - mean);
    if (chi2_ok(chi2, static_cast<double>(k - 1))) {
      est.theta = std::max(0.0, mean);
      est.alpha = kInf;
      est.fit_residual = chi2;
      est.stderr_ = 1.0 / std::sqrt(wsum);
      est.note = "constant model accepted";
      return est;
    }
  }

  // profile alpha: coarse log grid, then golden refinement around the best node
  const double r_ref = rr[k - 1];
  auto sse_at = [&](double a) { return fit_fixed_alpha(rr, v, w, r_ref, a).sse; };
  constexpr int kGrid = 160;
  constexpr double kAlphaMin = 0.02, kAlphaMax = 8.0;
  std::vector<double> grid(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    grid[i] = kAlphaMin * std::pow(kAlphaMax / kAlphaMin, static_cast<double>(i) / (kGrid - 1));
  }
  int best = 0;
  double best_sse = kInf;
  for (int i = 0; i < kGrid; ++i) {
    const double s = sse_at(grid[i]);
    if (s < best_sse) {
      best_sse = s;
      best = i;
    }
  }
  double alpha = grid[best];
  if (std::isfinite(best_sse)) {
    double lo = grid[std::max(best - 1, 0)], hi = grid[std::min(best + 1, kGrid - 1)];
    constexpr double kInvPhi = 0.6180339887498949;
    double c1 = hi - kInvPhi * (hi - lo), c2 = lo + kInvPhi * (hi - lo);
    double s1 = sse_at(c1), s2 = sse_at(c2);
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
      if (s1 < s2) {
        hi = c2; c2 = c1; s2 = s1;
        c1 = hi - kInvPhi * (hi - lo);
        s1 = sse_at(c1);
      } else {
        lo = c1; c1 = c2; s1 = s2;
        c2 = lo + kInvPhi * (hi - lo);
        s2 = sse_at(c2);
      }
    }
    const double cand = s1 < s2 ? c1 : c2;
    if (sse_at(cand) <= best_sse) alpha = cand;
  }
  const LinearFit fit = fit_fixed_alpha(rr, v, w, r_ref, alpha);

  const double span = std::abs(last - prev) + 3.0 * max_se;
  const double lo_guard = std::min(last, prev) - span;
  const double hi_guard = std::max(last, prev) + span;
  const double dof = static_cast<double>(k) - 3.0;
  bool monotone = true;
  for (std::size_t j = 2; j < k; ++j) {
    if ((v[j] - v[j - 1]) * (v[j - 1] - v[j - 2]) < 0.0) monotone = false;
  }
  const bool fit_ok = std::isfinite(fit.sse) && fit.theta >= lo_guard && fit.theta <= hi_guard &&
                      (noisy ? chi2_ok(fit.sse, dof) : monotone);

  if (!fit_ok) {
    double dev = 0.0;
    for (double x : v) dev = std::max(dev, std::abs(x - last));
    est.theta = std::max(0.0, last);
    est.alpha = 0.0;
    est.fit_residual = fit.sse;
    est.stderr_ = std::sqrt(se[k - 1] * se[k - 1] + dev * dev);
    est.flagged = true;
    est.note = "tail not explained by theta + c r^-alpha; widest-radius value returned";
    return est;
  }

  est.theta = std::max(0.0, fit.theta);
  est.alpha = alpha;
  est.c = fit.c * std::pow(r_ref, alpha);
  est.fit_residual = fit.sse;
  if (noisy) {
    est.stderr_ = std::sqrt(fit.var_theta);
  } else {
    est.stderr_ = dof > 0.0 ? std::sqrt(fit.var_theta * fit.sse / dof) : 0.0;
  }
  est.note = "power-law tail fit";
  return est;
}

}  // namespace densinf
