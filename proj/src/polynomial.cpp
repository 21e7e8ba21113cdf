#include "densinf/polynomial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace densinf {

namespace {

unsigned total_degree(std::span<const unsigned> e) {
  return std::accumulate(e.begin(), e.end(), 0u);
}

// true when a precedes b in graded lexicographic order
bool grlex_before(std::span<const unsigned> a, std::span<const unsigned> b) {
  const unsigned da = total_degree(a);
  const unsigned db = total_degree(b);
  if (da != db) return da > db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

double ipow(double x, unsigned e) {
  double r = 1.0;
  while (e) {
    if (e & 1u) r *= x;
    x *= x;
    e >>= 1u;
  }
  return r;
}

void require_same_nvars(const Polynomial& a, const Polynomial& b) {
  if (a.nvars() != b.nvars()) {
    throw std::invalid_argument("polynomial arithmetic with mixed nvars (" +
                                std::to_string(a.nvars()) + " vs " +
                                std::to_string(b.nvars()) + ")");
  }
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

Polynomial::Polynomial(std::size_t nvars) : nvars_(nvars) {
  if (nvars == 0) throw std::invalid_argument("polynomial needs at least one variable");
}

Polynomial::Polynomial(std::size_t nvars, std::vector<Term> terms) : Polynomial(nvars) {
  canonicalize(std::move(terms));
}

Polynomial Polynomial::constant(std::size_t nvars, double c) {
  return Polynomial(nvars, {Term{c, std::vector<unsigned>(nvars, 0)}});
}

Polynomial Polynomial::variable(std::size_t nvars, std::size_t index) {
  if (index >= nvars) throw std::out_of_range("variable index out of range");
  std::vector<unsigned> e(nvars, 0);
  e[index] = 1;
  return Polynomial(nvars, {Term{1.0, std::move(e)}});
}

void Polynomial::canonicalize(std::vector<Term> terms) {
  for (const auto& t : terms) {
    if (t.exponents.size() != nvars_) {
      throw std::invalid_argument("term exponent tuple has wrong length");
    }
    if (!std::isfinite(t.coeff)) throw std::invalid_argument("non-finite coefficient");
  }
  std::stable_sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) {
    return grlex_before(a.exponents, b.exponents);
  });

  coeffs_.clear();
  exps_.clear();
  std::size_t i = 0;
  while (i < terms.size()) {
    std::size_t j = i;
    double c = 0.0;
    while (j < terms.size() && terms[j].exponents == terms[i].exponents) {
      c += terms[j].coeff;
      ++j;
    }
    if (c != 0.0) {
      coeffs_.push_back(c);
      exps_.insert(exps_.end(), terms[i].exponents.begin(), terms[i].exponents.end());
    }
    i = j;
  }
  degree_ = coeffs_.empty() ? kZeroDegree : static_cast<int>(total_degree(exponents(0)));
}

std::vector<Term> Polynomial::terms() const {
  std::vector<Term> out;
  out.reserve(size());
  for (std::size_t k = 0; k < size(); ++k) {
    auto e = exponents(k);
    out.push_back(Term{coeffs_[k], {e.begin(), e.end()}});
  }
  return out;
}

unsigned Polynomial::max_exponent(std::size_t var) const {
  unsigned m = 0;
  for (std::size_t k = 0; k < size(); ++k) m = std::max(m, exps_[k * nvars_ + var]);
  return m;
}

double Polynomial::operator()(std::span<const double> x) const {
  if (x.size() != nvars_) {
    throw std::invalid_argument("dimension mismatch: point has " + std::to_string(x.size()) +
                                " coordinates, polynomial has " + std::to_string(nvars_) +
                                " variables");
  }
  // Neumaier summation
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    double term = coeffs_[k];
    const unsigned* e = exps_.data() + k * nvars_;
    for (std::size_t i = 0; i < nvars_; ++i) {
      if (e[i]) term *= ipow(x[i], e[i]);
    }
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) {
      comp += (sum - t) + term;
    } else {
      comp += (term - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double Polynomial::magnitude(std::span<const double> x) const {
  double m = 0.0;
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    double term = std::abs(coeffs_[k]);
    const unsigned* e = exps_.data() + k * nvars_;
    for (std::size_t i = 0; i < nvars_; ++i) {
      if (e[i]) term *= ipow(std::abs(x[i]), e[i]);
    }
    m += term;
  }
  return m;
}

Polynomial Polynomial::derivative(std::size_t var) const {
  if (var >= nvars_) throw std::out_of_range("derivative variable out of range");
  std::vector<Term> out;
  for (std::size_t k = 0; k < size(); ++k) {
    auto e = exponents(k);
    if (e[var] == 0) continue;
    Term t{coeffs_[k] * e[var], {e.begin(), e.end()}};
    t.exponents[var] -= 1;
    out.push_back(std::move(t));
  }
  return Polynomial(nvars_, std::move(out));
}

std::vector<Polynomial> Polynomial::gradient() const {
  std::vector<Polynomial> g;
  g.reserve(nvars_);
  for (std::size_t i = 0; i < nvars_; ++i) g.push_back(derivative(i));
  return g;
}

Polynomial Polynomial::operator-() const { return scaled(-1.0); }

Polynomial Polynomial::scaled(double s) const {
  auto t = terms();
  for (auto& term : t) term.coeff *= s;
  return Polynomial(nvars_, std::move(t));
}

Polynomial Polynomial::pow(unsigned k) const {
  Polynomial result = constant(nvars_, 1.0);
  Polynomial base = *this;
  while (k) {
    if (k & 1u) result = result * base;
    k >>= 1u;
    if (k) base = base * base;
  }
  return result;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  require_same_nvars(a, b);
  auto t = a.terms();
  auto tb = b.terms();
  t.insert(t.end(), std::make_move_iterator(tb.begin()), std::make_move_iterator(tb.end()));
  return Polynomial(a.nvars(), std::move(t));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  require_same_nvars(a, b);
  const std::size_t n = a.nvars();
  std::vector<Term> t;
  t.reserve(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto ea = a.exponents(i);
    for (std::size_t j = 0; j < b.size(); ++j) {
      auto eb = b.exponents(j);
      Term term{a.coeff(i) * b.coeff(j), std::vector<unsigned>(n)};
      for (std::size_t v = 0; v < n; ++v) term.exponents[v] = ea[v] + eb[v];
      t.push_back(std::move(term));
    }
  }
  return Polynomial(n, std::move(t));
}

std::string Polynomial::to_string() const {
  if (is_zero()) return "0";
  auto var_name = [this](std::size_t i) -> std::string {
    if (nvars_ <= 3) return std::string(1, "xyz"[i]);
    return "x" + std::to_string(i + 1);
  };
  std::string out;
  for (std::size_t k = 0; k < size(); ++k) {
    const double c = coeffs_[k];
    const double mag = std::abs(c);
    if (k == 0) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    auto e = exponents(k);
    std::string mono;
    for (std::size_t i = 0; i < nvars_; ++i) {
      if (!e[i]) continue;
      if (!mono.empty()) mono += "*";
      mono += var_name(i);
      if (e[i] > 1) mono += "^" + std::to_string(e[i]);
    }
    if (mono.empty()) {
      out += format_number(mag);
    } else if (mag == 1.0) {
      out += mono;
    } else {
      out += format_number(mag) + "*" + mono;
    }
  }
  return out;
}

DifferentiablePolynomial::DifferentiablePolynomial(Polynomial f, bool with_hessian)
    : f_(std::move(f)), grad_(f_.gradient()) {
  if (with_hessian) {
    const std::size_t n = f_.nvars();
    hess_.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) hess_.push_back(grad_[i].derivative(j));
    }
  }
}

Vector DifferentiablePolynomial::gradient(std::span<const double> x) const {
  Vector g(grad_.size());
  for (std::size_t i = 0; i < grad_.size(); ++i) g[i] = grad_[i](x);
  return g;
}

double DifferentiablePolynomial::gradient_norm(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& p : grad_) {
    const double v = p(x);
    s += v * v;
  }
  return std::sqrt(s);
}

std::vector<double> DifferentiablePolynomial::hessian(std::span<const double> x) const {
  if (hess_.empty()) throw std::logic_error("hessian not prepared");
  std::vector<double> h(hess_.size());
  for (std::size_t i = 0; i < hess_.size(); ++i) h[i] = hess_[i](x);
  return h;
}

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace densinf
