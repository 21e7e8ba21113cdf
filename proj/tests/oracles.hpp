#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's root finders or estimators; functions are given as plain lambdas.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "densinf/polynomial.hpp"

namespace oracle {

using Fn2 = std::function<double(double, double)>;

/// Sign changes of g(th) = f(r cos th, r sin th) - t on a uniform grid of
/// `cells` angles (cyclic). Exact zeros at grid nodes count once.
inline int circle_sign_changes(const Fn2& f, double t, double r, int cells = 1 << 20) {
  auto g = [&](int k) {
    const double th = 2.0 * std::numbers::pi * k / cells;
    return f(r * std::cos(th), r * std::sin(th)) - t;
  };
  int count = 0;
  double prev = g(cells - 1);
  for (int k = 0; k < cells; ++k) {
    const double cur = g(k);
    if (cur == 0.0) {
      ++count;
    } else if (prev != 0.0 && (prev < 0.0) != (cur < 0.0)) {
      ++count;
    }
    prev = cur;
  }
  return count;
}

/// Central difference of a scalar function along coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h) {
  const double xi = x[i];
  x[i] = xi + h;
  const double fp = f(x);
  x[i] = xi - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

/// Random polynomial with `terms` monomials of total degree <= max_degree.
inline densinf::Polynomial random_polynomial(std::mt19937_64& gen, std::size_t nvars,
                                             unsigned max_degree, int terms) {
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  std::uniform_int_distribution<unsigned> expo(0, max_degree);
  std::vector<densinf::Term> ts;
  for (int k = 0; k < terms; ++k) {
    densinf::Term t{coeff(gen), std::vector<unsigned>(nvars, 0)};
    unsigned budget = max_degree;
    for (std::size_t i = 0; i < nvars; ++i) {
      const unsigned e = std::min(budget, expo(gen));
      t.exponents[i] = e;
      budget -= e;
    }
    ts.push_back(std::move(t));
  }
  return densinf::Polynomial(nvars, std::move(ts));
}

/// Polyline length of a parametrised planar curve.
inline double polyline_length(const std::function<std::pair<double, double>(double)>& c, double a,
                              double b, int segments) {
  double len = 0.0;
  auto [px, py] = c(a);
  for (int k = 1; k <= segments; ++k) {
    auto [x, y] = c(a + (b - a) * k / segments);
    len += std::hypot(x - px, y - py);
    px = x;
    py = y;
  }
  return len;
}

}  // namespace oracle
