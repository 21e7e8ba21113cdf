#include "densinf/interval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace densinf {

Interval operator+(Interval a, Interval b) noexcept { return {a.lo + b.lo, a.hi + b.hi}; }

Interval operator*(Interval a, Interval b) noexcept {
  const double p1 = a.lo * b.lo;
  const double p2 = a.lo * b.hi;
  const double p3 = a.hi * b.lo;
  const double p4 = a.hi * b.hi;
  return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
}

Interval ipow(Interval a, unsigned e) noexcept {
  if (e == 0) return {1.0, 1.0};
  const double l = std::pow(a.lo, e);
  const double h = std::pow(a.hi, e);
  if (e % 2 == 1) return {l, h};
  if (a.lo >= 0.0) return {l, h};
  if (a.hi <= 0.0) return {h, l};
  return {0.0, std::max(l, h)};
}

Interval enclose(const Polynomial& p, std::span<const Interval> box, double pad) {
  Interval acc{0.0, 0.0};
  double scale = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    Interval term{p.coeff(k), p.coeff(k)};
    auto e = p.exponents(k);
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i]) term = term * ipow(box[i], e[i]);
    }
    acc = acc + term;
    scale += std::max(std::abs(term.lo), std::abs(term.hi));
  }
  const double margin = pad * scale;
  return {acc.lo - margin, acc.hi + margin};
}

std::array<Interval, 2> arc_box(double r, double a, double b) noexcept {
  const double ca = std::cos(a), cb = std::cos(b);
  const double sa = std::sin(a), sb = std::sin(b);
  double cmin = std::min(ca, cb), cmax = std::max(ca, cb);
  double smin = std::min(sa, sb), smax = std::max(sa, sb);
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  // extreme angles k * pi/2 strictly inside [a, b]
  for (long k = static_cast<long>(std::floor(a / kHalfPi)) + 1;
       static_cast<double>(k) * kHalfPi < b; ++k) {
    switch (((k % 4) + 4) % 4) {
      case 0: cmax = 1.0; break;
      case 1: smax = 1.0; break;
      case 2: cmin = -1.0; break;
      case 3: smin = -1.0; break;
    }
  }
  // trig rounding
  constexpr double kEps = 4e-16;
  return {Interval{r * (cmin - kEps), r * (cmax + kEps)},
          Interval{r * (smin - kEps), r * (smax + kEps)}};
}

}  // namespace densinf
