#pragma once

#include <array>
#include <span>

#include "densinf/polynomial.hpp"

namespace densinf {

/// Closed interval [lo, hi]. Arithmetic rounds to nearest; enclosures are
/// widened by a relative margin at the end of polynomial evaluation instead
/// of using directed rounding.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
  double width() const noexcept { return hi - lo; }
};

Interval operator+(Interval a, Interval b) noexcept;
Interval operator*(Interval a, Interval b) noexcept;
Interval ipow(Interval a, unsigned e) noexcept;

/// Enclosure of p over the box. Relative padding of `pad` times the sum of
/// term magnitudes absorbs rounding.
Interval enclose(const Polynomial& p, std::span<const Interval> box, double pad = 1e-13);

/// Bounding box of the arc r (cos th, sin th), th in [a, b], b - a < 2 pi.
std::array<Interval, 2> arc_box(double r, double a, double b) noexcept;

}  // namespace densinf
