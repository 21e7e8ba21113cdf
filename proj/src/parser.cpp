#include <cctype>
#include <charconv>

#include "densinf/polynomial.hpp"

namespace densinf {

ParseError::ParseError(Kind kind, std::size_t position, const std::string& message)
    : std::runtime_error("at position " + std::to_string(position) + ": " + message),
      kind_(kind),
      position_(position) {}

namespace {

constexpr unsigned kMaxExponent = 255;

class Parser {
 public:
  Parser(std::string_view src, std::size_t nvars) : src_(src), nvars_(nvars) {}

  Polynomial parse() {
    Polynomial p = expr();
    skip_ws();
    if (pos_ < src_.size()) unexpected();
    return p;
  }

 private:
  Polynomial expr() {
    Polynomial acc = term();
    for (;;) {
      skip_ws();
      if (accept('+')) {
        acc = acc + term();
      } else if (accept('-')) {
        acc = acc - term();
      } else {
        return acc;
      }
    }
  }

  Polynomial term() {
    Polynomial acc = factor();
    for (;;) {
      skip_ws();
      if (accept('*')) {
        acc = acc * factor();
      } else if (peek() == '/') {
        throw ParseError(ParseError::Kind::kNonPolynomial, pos_,
                         "division is not a polynomial construct");
      } else {
        return acc;
      }
    }
  }

  Polynomial factor() {
    skip_ws();
    const char c = peek();
    if (c == '-' || c == '+') {
      ++pos_;
      Polynomial inner = factor();
      return c == '-' ? -inner : inner;
    }
    if (c == '(') {
      ++pos_;
      Polynomial inner = expr();
      skip_ws();
      if (!accept(')')) {
        throw ParseError(ParseError::Kind::kSyntax, pos_, "expected ')'");
      }
      return power_suffix(std::move(inner));
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return Polynomial::constant(nvars_, number());
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      return power_suffix(variable());
    }
    unexpected();
  }

  Polynomial power_suffix(Polynomial base) {
    skip_ws();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t start = pos_;
    if (peek() == '-' || peek() == '+' || peek() == '(') {
      throw ParseError(ParseError::Kind::kNonPolynomial, start,
                       "exponent must be a non-negative integer literal");
    }
    unsigned e = 0;
    auto res = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), e);
    if (res.ec == std::errc::result_out_of_range) {
      throw ParseError(ParseError::Kind::kSyntax, start, "exponent too large");
    }
    if (res.ec != std::errc()) {
      throw ParseError(ParseError::Kind::kSyntax, start, "expected integer exponent");
    }
    pos_ = static_cast<std::size_t>(res.ptr - src_.data());
    const char next = peek();
    if (next == '.' || next == 'e' || next == 'E') {
      throw ParseError(ParseError::Kind::kNonPolynomial, start,
                       "exponent must be a non-negative integer literal");
    }
    if (e > kMaxExponent) {
      throw ParseError(ParseError::Kind::kSyntax, start,
                       "exponent exceeds " + std::to_string(kMaxExponent));
    }
    return base.pow(e);
  }

  double number() {
    const std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (peek() == '.') {
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t save = pos_;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != src_.data() + pos_) {
      throw ParseError(ParseError::Kind::kSyntax, start, "malformed number");
    }
    return v;
  }

  Polynomial variable() {
    const std::size_t start = pos_;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);

    std::size_t index = nvars_;
    if (name.size() == 1 && nvars_ <= 3 && (name[0] == 'x' || name[0] == 'y' || name[0] == 'z')) {
      index = static_cast<std::size_t>(name[0] - 'x');
    } else if (name.size() > 1 && name[0] == 'x') {
      std::size_t k = 0;
      auto res = std::from_chars(name.data() + 1, name.data() + name.size(), k);
      if (res.ec == std::errc() && res.ptr == name.data() + name.size() && k >= 1) {
        index = k - 1;
      }
    }
    if (index >= nvars_) {
      throw ParseError(ParseError::Kind::kUnknownVariable, start,
                       "unknown variable '" + std::string(name) + "' for " +
                           std::to_string(nvars_) + " variables");
    }
    return Polynomial::variable(nvars_, index);
  }

  [[noreturn]] void unexpected() {
    if (pos_ >= src_.size()) {
      throw ParseError(ParseError::Kind::kSyntax, pos_, "unexpected end of input");
    }
    const char c = src_[pos_];
    if (c == '/') {
      throw ParseError(ParseError::Kind::kNonPolynomial, pos_,
                       "division is not a polynomial construct");
    }
    throw ParseError(ParseError::Kind::kSyntax, pos_,
                     std::string("unexpected character '") + c + "'");
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
  bool accept(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  std::string_view src_;
  std::size_t nvars_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse_polynomial(std::string_view src, std::size_t nvars) {
  if (nvars == 0) throw std::invalid_argument("nvars must be positive");
  return Parser(src, nvars).parse();
}

}  // namespace densinf
