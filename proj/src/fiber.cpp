#include "densinf/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "densinf/interval.hpp"

namespace densinf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool opposite_signs(double a, double b) { return (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0); }

class CircleScanner {
 public:
  CircleScanner(const Polynomial& f, double t, double r, const CircleScanOptions& opts)
      : shifted_(f - Polynomial::constant(2, t)), r_(r), opts_(opts) {
    const Polynomial x = Polynomial::variable(2, 0);
    const Polynomial y = Polynomial::variable(2, 1);
    angular_ = x * f.derivative(1) - y * f.derivative(0);
  }

  void run() {
    const std::size_t m = opts_.resolution;
    std::vector<double> theta(m + 1);
    std::vector<double> values(m + 1);
    for (std::size_t k = 0; k < m; ++k) {
      theta[k] = kTwoPi * static_cast<double>(k) / static_cast<double>(m);
      values[k] = g(theta[k]);
    }
    theta[m] = kTwoPi;
    values[m] = values[0];  // periodicity; keeps root ownership at 0 consistent

    // g is a trigonometric polynomial of degree <= deg f; more near-zeros than
    // 2 deg f + 1 on the grid means the whole circle lies in the fiber.
    std::size_t near_zero = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (std::abs(values[k]) <= 1e-12 * g_scale(theta[k])) ++near_zero;
    }
    if (near_zero > 2 * static_cast<std::size_t>(std::max(shifted_.degree(), 0)) + 1) {
      complete = false;
      return;
    }
    for (std::size_t k = 0; k < m; ++k) {
      process(theta[k], theta[k + 1], values[k], values[k + 1]);
    }
  }

  std::vector<std::pair<double, bool>> roots;  // (angle, tangency)
  bool complete = true;

 private:
  double g(double th) const {
    const double p[2] = {r_ * std::cos(th), r_ * std::sin(th)};
    return shifted_(p);
  }

  double g_scale(double th) const {
    const double p[2] = {r_ * std::cos(th), r_ * std::sin(th)};
    return shifted_.magnitude(p);
  }

  // Cells are half-open [a, b): a root exactly at b belongs to the next cell.
  void process(double a, double b, double ga, double gb) {
    const auto box = arc_box(r_, a, b);
    if (!enclose(shifted_, box).contains(0.0)) {
      cluster_end_ = -1.0;
      return;
    }
    const bool monotone = !enclose(angular_, box).contains(0.0);
    if (monotone && ga != 0.0) {
      cluster_end_ = -1.0;
      if (opposite_signs(ga, gb)) roots.emplace_back(bisect(a, b, ga), false);
      return;
    }
    if (!monotone && b - a >= opts_.min_cell && cells_split_ < opts_.max_cells) {
      ++cells_split_;
      const double mid = 0.5 * (a + b);
      const double gm = g(mid);
      process(a, mid, ga, gm);
      process(mid, b, gm, gb);
      return;
    }
    suspicious(a, b, ga, gb, monotone);
  }

  // Adjacent leaves that are uncertified or start at an exact zero form one
  // cluster. A cluster reports its sign changes, or failing that a single
  // near-zero point, flagged as a tangency unless it is an isolated exact zero.
  void suspicious(double a, double b, double ga, double gb, bool monotone) {
    if (a != cluster_end_) {
      golden_ = kNone;
      cluster_signed_ = false;
      cluster_leaves_ = 0;
      cluster_uncertified_ = false;
    }
    cluster_end_ = b;
    ++cluster_leaves_;
    cluster_uncertified_ = cluster_uncertified_ || !monotone;
    if (golden_ != kNone) flag_golden();

    if (monotone || ga == 0.0) {
      candidate(a, 0.0);
      return;
    }
    if (opposite_signs(ga, gb)) {
      complete = false;
      if (golden_ != kNone) {
        roots.erase(roots.begin() + static_cast<std::ptrdiff_t>(golden_));
        golden_ = kNone;
      }
      cluster_signed_ = true;
      roots.emplace_back(bisect(a, b, ga), true);
      return;
    }
    // golden-section search for the smallest |g| in the cell
    constexpr double kInvPhi = 0.6180339887498949;
    double lo = a, hi = b;
    double c = hi - kInvPhi * (hi - lo), d = lo + kInvPhi * (hi - lo);
    double gc = std::abs(g(c)), gd = std::abs(g(d));
    for (int it = 0; it < 60 && hi - lo > 0.0; ++it) {
      if (gc < gd) {
        hi = d; d = c; gd = gc;
        c = hi - kInvPhi * (hi - lo);
        gc = std::abs(g(c));
      } else {
        lo = c; c = d; gc = gd;
        d = lo + kInvPhi * (hi - lo);
        gd = std::abs(g(d));
      }
    }
    const double th = gc < gd ? c : d;
    const double gmin = std::min(gc, gd);
    if (gmin <= 1e-10 * g_scale(th)) candidate(th, gmin);
  }

  void candidate(double th, double gmin) {
    if (cluster_signed_) return;
    if (golden_ == kNone) {
      golden_ = roots.size();
      golden_g_ = gmin;
      golden_lo_ = th;
      roots.emplace_back(th, false);
    } else if (gmin < golden_g_) {
      golden_g_ = gmin;
      golden_lo_ = th;
      roots[golden_].first = th;
    } else if (gmin == 0.0 && golden_g_ == 0.0) {
      roots[golden_].first = 0.5 * (golden_lo_ + th);  // middle of a run of exact zeros
    }
    flag_golden();
  }

  void flag_golden() {
    if (cluster_uncertified_ || cluster_leaves_ > 1) {
      roots[golden_].second = true;
      complete = false;
    }
  }

  // Bisection to adjacent doubles; returns the endpoint with smaller |g|.
  double bisect(double a, double b, double ga) const {
    double gb_abs = std::abs(g(b));
    for (;;) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      const double gm = g(mid);
      if (gm == 0.0) return mid;
      if (opposite_signs(ga, gm)) {
        b = mid;
        gb_abs = std::abs(gm);
      } else {
        a = mid;
        ga = gm;
      }
    }
    return std::abs(ga) <= gb_abs ? a : b;
  }

  Polynomial shifted_;
  Polynomial angular_{2};  // x f_y - y f_x = dg/dth
  double r_;
  CircleScanOptions opts_;
  std::size_t cells_split_ = 0;

  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  double cluster_end_ = -1.0;
  bool cluster_signed_ = false;
  bool cluster_uncertified_ = false;
  std::size_t cluster_leaves_ = 0;
  std::size_t golden_ = kNone;
  double golden_g_ = 0.0;
  double golden_lo_ = 0.0;
};

}  // namespace

FiberPoint annotate(const DifferentiablePolynomial& f, double t, Vector x) {
  FiberPoint p;
  p.f_residual = f.value(x) - t;
  p.grad_norm = f.gradient_norm(x);
  p.rabier = norm(x) * p.grad_norm;
  p.x = std::move(x);
  return p;
}

FiberPointSet circle_fiber_points(const Polynomial& f, double t, double r,
                                  const CircleScanOptions& opts) {
  if (f.nvars() != 2) throw std::invalid_argument("circle_fiber_points: f must have 2 variables");
  if (!(r > 0.0)) throw std::invalid_argument("circle_fiber_points: r must be positive");
  if (opts.resolution < 16) throw std::invalid_argument("circle_fiber_points: resolution < 16");

  CircleScanner scan(f, t, r, opts);
  scan.run();

  const DifferentiablePolynomial df(f);
  FiberPointSet out{t, r, {}, scan.complete};
  out.points.reserve(scan.roots.size());
  for (const auto& [th, tangency] : scan.roots) {
    FiberPoint p = annotate(df, t, {r * std::cos(th), r * std::sin(th)});
    p.tangency = tangency;
    out.points.push_back(std::move(p));
  }
  if (out.points.size() % 2 == 1) out.complete = false;
  return out;
}

Projection newton_project(const DifferentiablePolynomial& f, double t, double r,
                          std::span<const double> x0, double tol, int max_iterations) {
  const std::size_t n = f.nvars();
  if (x0.size() != n) throw std::invalid_argument("newton_project: dimension mismatch");
  if (!(r > 0.0)) throw std::invalid_argument("newton_project: r must be positive");

  Vector x(x0.begin(), x0.end());
  auto residuals = [&](const Vector& p) {
    const double n2 = dot(p, p);
    return std::pair{f.value(p) - t, (n2 - r * r) / (2.0 * r)};
  };
  auto converged = [&](const Vector& p, double f1) {
    return std::abs(f1) <= tol * std::max(1.0, f.function().magnitude(p)) &&
           std::abs(norm(p) - r) <= tol * r;
  };

  for (int it = 0;; ++it) {
    auto [f1, f2] = residuals(x);
    if (converged(x, f1)) return {x, it};
    if (it >= max_iterations) break;

    const Vector g = f.gradient(x);
    Vector h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = x[i] / r;
    const double a11 = dot(g, g), a12 = dot(g, h), a22 = dot(h, h);
    const double det = a11 * a22 - a12 * a12;
    if (!(det > 1e-14 * a11 * a22)) {
      throw NonConvergence(NonConvergence::Kind::kRankDeficient,
                           "newton_project: constraint gradients are parallel");
    }
    // minimum-norm step: J^T (J J^T)^{-1} F
    const double l1 = (a22 * f1 - a12 * f2) / det;
    const double l2 = (a11 * f2 - a12 * f1) / det;
    Vector step(n);
    for (std::size_t i = 0; i < n; ++i) step[i] = -(l1 * g[i] + l2 * h[i]);

    const double gn = std::sqrt(a11);
    auto merit = [&](double a, double b) { return (a / gn) * (a / gn) + b * b; };
    const double m0 = merit(f1, f2);
    double alpha = 1.0;
    Vector trial(n);
    for (int k = 0; k < 30; ++k) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + alpha * step[i];
      auto [t1, t2] = residuals(trial);
      if (merit(t1, t2) < m0 || converged(trial, t1)) break;
      alpha *= 0.5;
    }
    x = trial;
  }
  throw NonConvergence(NonConvergence::Kind::kMaxIterations,
                       "newton_project: no convergence within iteration limit");
}

SlabSample slab_sample(const DifferentiablePolynomial& f, double t, double r, double delta,
                       std::size_t count, RngStream& rng, SlabMode mode) {
  const std::size_t n = f.nvars();
  if (!(delta > 0.0)) throw std::invalid_argument("slab_sample: delta must be positive");
  if (!(r > 0.0)) throw std::invalid_argument("slab_sample: r must be positive");
  if (count == 0) throw std::invalid_argument("slab_sample: N must be >= 1");

  SlabSample s{t, r, delta, mode, {}, count};
  Vector x(n);
  for (std::size_t k = 0; k < count; ++k) {
    if (mode == SlabMode::kSphere) {
      double n2 = 0.0;
      do {
        for (auto& c : x) c = rng.normal();
        n2 = dot(x, x);
      } while (n2 == 0.0);
      const double scale = r / std::sqrt(n2);
      for (auto& c : x) c *= scale;
    } else if (n <= 4) {
      do {
        for (auto& c : x) c = rng.uniform(-r, r);
      } while (dot(x, x) > r * r);
    } else {
      double n2 = 0.0;
      do {
        for (auto& c : x) c = rng.normal();
        n2 = dot(x, x);
      } while (n2 == 0.0);
      const double rad = r * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
      const double scale = rad / std::sqrt(n2);
      for (auto& c : x) c *= scale;
    }

    const double fv = f.value(x);
    if (!(std::abs(fv - t) < delta)) continue;

    SlabDraw d;
    d.x = x;
    d.f_value = fv;
    const Vector g = f.gradient(x);
    d.grad_norm = norm(g);
    const double xn2 = dot(x, x);
    if (xn2 > 0.0) {
      const double c = dot(g, x) / xn2;
      double s2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = g[i] - c * x[i];
        s2 += w * w;
      }
      d.tangential_grad_norm = std::sqrt(s2);
    }
    s.draws.push_back(std::move(d));
  }
  return s;
}

FiberPointSet sphere_fiber_points(const DifferentiablePolynomial& f, double t, double r,
                                  double delta, std::size_t count, RngStream& rng) {
  const SlabSample slab = slab_sample(f, t, r, delta, count, rng, SlabMode::kSphere);
  FiberPointSet out{t, r, {}, false};
  for (const auto& d : slab.draws) {
    Vector x;
    try {
      x = newton_project(f, t, r, d.x).x;
    } catch (const NonConvergence&) {
      continue;
    }
    const bool dup = std::any_of(out.points.begin(), out.points.end(), [&](const FiberPoint& p) {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += (p.x[i] - x[i]) * (p.x[i] - x[i]);
      return std::sqrt(s) < 1e-9 * r;
    });
    if (!dup) out.points.push_back(annotate(f, t, std::move(x)));
  }
  return out;
}

}  // namespace densinf
