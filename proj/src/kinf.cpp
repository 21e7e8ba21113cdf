#include "densinf/kinf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "densinf/geometry.hpp"

namespace densinf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInvPhi = 0.6180339887498949;

double grad_norm_sq(const DifferentiablePolynomial& f, std::span<const double> x) {
  double s = 0.0;
  for (const auto& p : f.gradient_polys()) {
    const double v = p(x);
    s += v * v;
  }
  return s;
}

RabierPair make_pair(const DifferentiablePolynomial& f, Vector x) {
  RabierPair p;
  p.f_value = f.value(x);
  p.nu = norm(x) * f.gradient_norm(x);
  p.x = std::move(x);
  return p;
}

RabierField scan_circle(const DifferentiablePolynomial& f, double r,
                        const RabierScanOptions& opts) {
  const std::size_t m = opts.resolution;
  if (m < 3) throw std::invalid_argument("rabier_scan: resolution too small");
  RabierField field{r, {}, 0};
  field.pairs.reserve(m + 16);
  std::vector<double> nu(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
    field.pairs.push_back(make_pair(f, {r * std::cos(th), r * std::sin(th)}));
    nu[k] = field.pairs.back().nu;
  }
  auto sq = [&](double th) {
    const double p[2] = {r * std::cos(th), r * std::sin(th)};
    return grad_norm_sq(f, p);
  };
  const double step = 2.0 * std::numbers::pi / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double left = nu[(k + m - 1) % m];
    const double right = nu[(k + 1) % m];
    // strict on the left with a relative margin so rounding noise on a flat nu is ignored
    if (!(nu[k] < left * (1.0 - 1e-12) && nu[k] <= right)) continue;
    const double th0 = step * static_cast<double>(k);
    double lo = th0 - step, hi = th0 + step;
    double c = hi - kInvPhi * (hi - lo), d = lo + kInvPhi * (hi - lo);
    double fc = sq(c), fd = sq(d);
    while (hi - lo > opts.refine_tol) {
      if (fc < fd) {
        hi = d; d = c; fd = fc;
        c = hi - kInvPhi * (hi - lo);
        fc = sq(c);
      } else {
        lo = c; c = d; fc = fd;
        d = lo + kInvPhi * (hi - lo);
        fd = sq(d);
      }
    }
    const double th = fc < fd ? c : d;
    field.pairs.push_back(make_pair(f, {r * std::cos(th), r * std::sin(th)}));
    ++field.n_refined;
  }
  return field;
}

// projected gradient descent of |grad f|^2 on the sphere of radius r
Vector descend_on_sphere(const DifferentiablePolynomial& f, Vector x, double r) {
  const std::size_t n = x.size();
  double val = grad_norm_sq(f, x);
  double step = 1e-2 * r;
  for (int it = 0; it < 200 && val > 0.0; ++it) {
    const Vector g = f.gradient(x);
    const std::vector<double> h = f.hessian(x);
    Vector d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) d[i] += 2.0 * h[i * n + j] * g[j];
    }
    const double radial = dot(d, x) / (r * r);
    for (std::size_t i = 0; i < n; ++i) d[i] -= radial * x[i];
    const double dn = norm(d);
    if (!(dn > 0.0)) break;
    bool moved = false;
    for (int k = 0; k < 40; ++k) {
      Vector trial(n);
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] - step * d[i] / dn;
      const double tn = norm(trial);
      for (auto& c : trial) c *= r / tn;
      const double tv = grad_norm_sq(f, trial);
      if (tv < val) {
        x = std::move(trial);
        val = tv;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved || step < 1e-15 * r) break;
  }
  return x;
}

RabierField scan_sphere(const DifferentiablePolynomial& f, double r,
                        const RabierScanOptions& opts) {
  const std::size_t n = f.nvars();
  RngStream rng(opts.seed, Stage::kKinf, task_id(r, n));
  const SphereSample s = uniform_sphere_sample(n, r, opts.samples, rng);
  RabierField field{r, {}, 0};
  field.pairs.reserve(s.points.size());
  for (const auto& p : s.points) field.pairs.push_back(make_pair(f, p));

  std::vector<std::size_t> order(field.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  const auto n_refine = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(opts.refine_fraction * static_cast<double>(order.size()))));
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_refine), order.end(),
                    [&](std::size_t a, std::size_t b) { return field.pairs[a].nu < field.pairs[b].nu; });
  const DifferentiablePolynomial fh(f.function(), true);
  for (std::size_t i = 0; i < n_refine; ++i) {
    field.pairs.push_back(make_pair(f, descend_on_sphere(fh, field.pairs[order[i]].x, r)));
    ++field.n_refined;
  }
  return field;
}

}  // namespace

RabierField rabier_scan(const DifferentiablePolynomial& f, double r, const RabierScanOptions& opts) {
  if (!(r > 0.0)) throw std::invalid_argument("rabier_scan: r must be positive");
  return f.nvars() == 2 ? scan_circle(f, r, opts) : scan_sphere(f, r, opts);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t k = std::min(x.size(), y.size());
  if (k < 2) return kNaN;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double kk = static_cast<double>(k);
  const double den = kk * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) return kNaN;
  return (kk * sxy - sx * sy) / den;
}

namespace {

// slope over the widest `fit` radii where the series is finite and positive
double tail_slope(std::span<const double> radii, std::span<const double> series, std::size_t fit) {
  const std::size_t k = radii.size();
  const std::size_t start = k > fit ? k - fit : 0;
  std::vector<double> xs, ys;
  for (std::size_t j = start; j < k; ++j) {
    if (std::isfinite(series[j]) && series[j] > 0.0) {
      xs.push_back(radii[j]);
      ys.push_back(series[j]);
    }
  }
  if (xs.size() < 3) return kNaN;
  return loglog_slope(xs, ys);
}

}  // namespace

KinfResult detect_kinf(const Polynomial& f, std::span<const double> radii, const KinfOptions& opts) {
  if (radii.size() < 4) throw std::invalid_argument("detect_kinf: need >= 4 radii");
  if (opts.bins == 0 || !(opts.f_hi > opts.f_lo)) {
    throw std::invalid_argument("detect_kinf: bad f window");
  }
  const std::size_t nb = opts.bins;
  const double width = (opts.f_hi - opts.f_lo) / static_cast<double>(nb);
  const DifferentiablePolynomial df(f);

  KinfResult out;
  EnvelopeTable& env = out.envelope;
  env.radii.assign(radii.begin(), radii.end());
  for (std::size_t b = 0; b <= nb; ++b) env.bin_edges.push_back(opts.f_lo + width * static_cast<double>(b));
  env.min_nu.assign(radii.size(), std::vector<double>(nb, kInf));
  env.argmin.assign(radii.size(), std::vector<KinfWitness>(nb));

  for (std::size_t j = 0; j < radii.size(); ++j) {
    const double r = radii[j];
    auto update = [&](std::size_t b, const Vector& x, double fv, double nu) {
      if (nu < env.min_nu[j][b]) {
        env.min_nu[j][b] = nu;
        env.argmin[j][b] = KinfWitness{r, x, fv, nu};
      }
    };
    const RabierField field = rabier_scan(df, r, opts.scan);
    for (const auto& p : field.pairs) {
      if (!(p.f_value >= opts.f_lo && p.f_value <= opts.f_hi)) continue;
      const auto b = std::min(nb - 1, static_cast<std::size_t>((p.f_value - opts.f_lo) / width));
      update(b, p.x, p.f_value, p.nu);
    }
    if (f.nvars() == 2) {
      // bin boundaries: points where f equals an edge bound both neighbouring bins
      for (std::size_t e = 0; e <= nb; ++e) {
        const FiberPointSet edge = circle_fiber_points(f, env.bin_edges[e], r, opts.circle);
        for (const auto& p : edge.points) {
          if (e > 0) update(e - 1, p.x, env.bin_edges[e], p.rabier);
          if (e < nb) update(e, p.x, env.bin_edges[e], p.rabier);
        }
      }
    }
  }

  out.bin_slopes.assign(nb, kNaN);
  std::vector<bool> decaying(nb, false);
  std::vector<double> series(radii.size());
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t j = 0; j < radii.size(); ++j) series[j] = env.min_nu[j][b];
    out.bin_slopes[b] = tail_slope(radii, series, opts.fit_radii);
    const double last = series.back();
    decaying[b] = std::isfinite(out.bin_slopes[b]) && out.bin_slopes[b] < opts.slope_threshold &&
                  last < opts.abs_threshold;
  }

  for (std::size_t j = 0; j < radii.size(); ++j) {
    series[j] = *std::min_element(env.min_nu[j].begin(), env.min_nu[j].end());
  }
  out.envelope_slope = tail_slope(radii, series, opts.fit_radii);

  for (std::size_t b = 0; b < nb;) {
    if (!decaying[b]) {
      ++b;
      continue;
    }
    std::size_t e = b;
    while (e < nb && decaying[e]) ++e;
    KinfCandidate cand;
    cand.value = 0.5 * (env.bin_edges[b] + env.bin_edges[e]);
    cand.bin_width = width;
    for (std::size_t j = 0; j < radii.size(); ++j) {
      std::size_t best = b;
      for (std::size_t k = b; k < e; ++k) {
        if (env.min_nu[j][k] < env.min_nu[j][best]) best = k;
      }
      series[j] = env.min_nu[j][best];
      const KinfWitness& w = env.argmin[j][best];
      if (std::isfinite(w.nu) && !w.x.empty() && std::abs(w.f_value - cand.value) <= width) {
        cand.witnesses.push_back(w);
      }
    }
    cand.decay_slope = tail_slope(radii, series, opts.fit_radii);
    cand.final_nu = series.back();
    out.candidates.push_back(std::move(cand));
    b = e;
  }
  return out;
}

double fiber_rabier_min(const FiberPointSet& points) {
  double m = kInf;
  for (const auto& p : points.points) m = std::min(m, p.rabier);
  return m;
}

double fiber_rabier_min(const Polynomial& f, double t, double r, const CircleScanOptions& opts) {
  return fiber_rabier_min(circle_fiber_points(f, t, r, opts));
}

std::vector<Vector> critical_points(const Polynomial& f, SearchBox box, std::size_t grid) {
  if (f.nvars() != 2) throw std::invalid_argument("critical_points: needs n = 2");
  if (grid < 2 || !(box.hi > box.lo)) throw std::invalid_argument("critical_points: bad search box");
  const DifferentiablePolynomial df(f, true);
  const double span = box.hi - box.lo;
  std::vector<Vector> found;

  for (std::size_t i = 0; i < grid; ++i) {
    for (std::size_t j = 0; j < grid; ++j) {
      Vector x{box.lo + span * static_cast<double>(i) / static_cast<double>(grid - 1),
               box.lo + span * static_cast<double>(j) / static_cast<double>(grid - 1)};
      bool ok = false;
      for (int it = 0; it < 60; ++it) {
        const Vector g = df.gradient(x);
        const auto h = df.hessian(x);
        const double det = h[0] * h[3] - h[1] * h[2];
        const double scale = std::abs(h[0]) * std::abs(h[3]) + std::abs(h[1]) * std::abs(h[2]);
        if (!(std::abs(det) > 1e-14 * scale) || !(scale > 0.0)) break;
        const double dx = (h[3] * g[0] - h[1] * g[1]) / det;
        const double dy = (h[0] * g[1] - h[2] * g[0]) / det;
        x[0] -= dx;
        x[1] -= dy;
        if (!std::isfinite(x[0]) || !std::isfinite(x[1])) break;
        if (std::hypot(dx, dy) <= 1e-13 * (1.0 + norm(x))) {
          ok = true;
          break;
        }
      }
      if (!ok) continue;
      if (x[0] < box.lo - 0.5 * span || x[0] > box.hi + 0.5 * span ||
          x[1] < box.lo - 0.5 * span || x[1] > box.hi + 0.5 * span) {
        continue;
      }
      const Vector g = df.gradient(x);
      double gscale = 0.0;
      for (const auto& p : df.gradient_polys()) gscale = std::max(gscale, p.magnitude(x));
      if (norm(g) > 1e-9 * std::max(1.0, gscale)) continue;
      const bool dup = std::any_of(found.begin(), found.end(), [&](const Vector& q) {
        return std::hypot(q[0] - x[0], q[1] - x[1]) < 1e-8 * (1.0 + norm(x));
      });
      if (!dup) found.push_back(x);
    }
  }
  return found;
}

double sigma1(const Polynomial& f, double t, SearchBox box, std::size_t grid, double tol) {
  const std::vector<Vector> found = critical_points(f, box, grid);
  double best = 0.0;
  bool any = false;
  for (const auto& x : found) {
    if (std::abs(f(x) - t) <= tol * std::max(1.0, std::abs(t))) {
      best = std::max(best, norm(x));
      any = true;
    }
  }
  return any ? 1.0 + best : 1.0;
}

double sigma2(const Polynomial& f, double t, double eps1, std::span<const double> radii,
              const CircleScanOptions& opts) {
  if (!(eps1 >= 1.0)) throw std::invalid_argument("sigma2: eps1 must be >= 1");
  double m = kInf;
  for (double r : radii) {
    if (r < eps1) continue;
    m = std::min(m, fiber_rabier_min(f, t, r, opts));
  }
  return m;
}

std::vector<double> sigma2_radii(double eps1, double r_max, double ratio) {
  if (!(eps1 > 0.0) || !(ratio > 1.0) || !(r_max >= eps1)) {
    throw std::invalid_argument("sigma2_radii: bad schedule");
  }
  std::vector<double> r;
  for (double x = eps1; x <= r_max; x *= ratio) r.push_back(x);
  if (r.back() < r_max) r.push_back(r_max);
  return r;
}

namespace {

double interpolate(std::span<const double> ts, std::span<const double> ys, double t) {
  if (t <= ts.front()) return ys.front();
  if (t >= ts.back()) return ys.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - ts.begin());
  const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
  return ys[i - 1] + w * (ys[i] - ys[i - 1]);
}

}  // namespace

double SigmaEnvelope::eps1(double t) const { return interpolate(t_grid, eps1_nodes, t); }
double SigmaEnvelope::eps2(double t) const { return interpolate(t_grid, eps2_nodes, t); }

SigmaEnvelope build_envelopes(std::span<const SigmaSample> samples) {
  std::vector<SigmaSample> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  SigmaEnvelope env;
  for (const auto& p : s) {
    if (!std::isfinite(p.sigma2) || !(p.sigma2 > 0.0) || !std::isfinite(p.sigma1)) {
      env.dropped.push_back(p.t);
      continue;
    }
    if (!env.t_grid.empty() && p.t == env.t_grid.back()) continue;
    env.t_grid.push_back(p.t);
    env.sigma1.push_back(p.sigma1);
    env.sigma2.push_back(p.sigma2);
    env.eps1_nodes.push_back(1.1 * p.sigma1);
    env.eps2_nodes.push_back(0.9 * p.sigma2);
  }
  if (env.t_grid.size() < 2) {
    throw std::invalid_argument("build_envelopes: need >= 2 grid points with finite sigma2");
  }
  return env;
}

}  // namespace densinf
