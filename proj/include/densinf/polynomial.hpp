#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace densinf {

using Vector = std::vector<double>;

/// One monomial `coeff * x1^e1 * ... * xn^en`.
struct Term {
  double coeff = 0.0;
  std::vector<unsigned> exponents;
};

/// Sparse multivariate polynomial with double coefficients.
///
/// Always canonical: exponent tuples are unique, no coefficient is exactly
/// zero, and terms are kept in graded lexicographic order (highest total
/// degree first, ties broken lexicographically with x1 most significant).
/// Instances are immutable once built.
class Polynomial {
 public:
  /// Degree reported for the zero polynomial (stands in for -infinity).
  static constexpr int kZeroDegree = std::numeric_limits<int>::min();

  /// The zero polynomial in `nvars` variables.
  explicit Polynomial(std::size_t nvars);
  Polynomial(std::size_t nvars, std::vector<Term> terms);

  static Polynomial constant(std::size_t nvars, double c);
  static Polynomial variable(std::size_t nvars, std::size_t index);

  std::size_t nvars() const noexcept { return nvars_; }
  std::size_t size() const noexcept { return coeffs_.size(); }
  double coeff(std::size_t k) const { return coeffs_.at(k); }
  std::span<const unsigned> exponents(std::size_t k) const {
    return {exps_.data() + k * nvars_, nvars_};
  }
  std::vector<Term> terms() const;

  int degree() const noexcept { return degree_; }
  bool is_zero() const noexcept { return coeffs_.empty(); }
  bool is_constant() const noexcept { return degree_ <= 0; }
  unsigned max_exponent(std::size_t var) const;

  /// Term-by-term evaluation with Neumaier-compensated summation.
  double operator()(std::span<const double> x) const;
  /// Sum of |c| * |x^a| over terms, the natural scale for rounding error.
  double magnitude(std::span<const double> x) const;

  Polynomial derivative(std::size_t var) const;
  std::vector<Polynomial> gradient() const;

  Polynomial operator-() const;
  Polynomial scaled(double s) const;
  Polynomial pow(unsigned k) const;

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

  /// Renders in the expression grammar accepted by parse_polynomial.
  /// Uses x, y, z for up to three variables and x1..xn otherwise.
  std::string to_string() const;

  bool operator==(const Polynomial&) const = default;

 private:
  void canonicalize(std::vector<Term> terms);

  std::size_t nvars_;
  std::vector<double> coeffs_;
  std::vector<unsigned> exps_;  // row-major, size() x nvars_
  int degree_ = kZeroDegree;
};

/// Polynomial plus its exact first (and optionally second) partial derivatives,
/// for hot loops that evaluate both repeatedly.
class DifferentiablePolynomial {
 public:
  explicit DifferentiablePolynomial(Polynomial f, bool with_hessian = false);

  const Polynomial& function() const noexcept { return f_; }
  const std::vector<Polynomial>& gradient_polys() const noexcept { return grad_; }
  std::size_t nvars() const noexcept { return f_.nvars(); }
  bool has_hessian() const noexcept { return !hess_.empty(); }

  double value(std::span<const double> x) const { return f_(x); }
  Vector gradient(std::span<const double> x) const;
  double gradient_norm(std::span<const double> x) const;
  /// Row-major n x n. Requires construction with `with_hessian`.
  std::vector<double> hessian(std::span<const double> x) const;

 private:
  Polynomial f_;
  std::vector<Polynomial> grad_;
  std::vector<Polynomial> hess_;  // row-major n x n
};

/// Raised for malformed or non-polynomial expression text.
class ParseError : public std::runtime_error {
 public:
  enum class Kind { kSyntax, kNonPolynomial, kUnknownVariable };

  ParseError(Kind kind, std::size_t position, const std::string& message);

  Kind kind() const noexcept { return kind_; }
  /// Zero-based byte offset into the source text.
  std::size_t position() const noexcept { return position_; }

 private:
  Kind kind_;
  std::size_t position_;
};

/// Grammar:
///   expr   := term (("+"|"-") term)*
///   term   := factor ("*" factor)*
///   factor := number | var ("^" uint)? | "(" expr ")"
///   var    := "x" uint | "x" | "y" | "z"
/// A leading sign on a factor is also accepted so printed output re-parses.
Polynomial parse_polynomial(std::string_view src, std::size_t nvars);

double norm(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace densinf
