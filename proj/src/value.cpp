#include "dedcons/value.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <numeric>

namespace dedcons {

namespace {

using i128 = __int128;

constexpr long long kMax = 0x7fffffffffffffffLL;

long long narrow(i128 v, const char* op) {
  if (v > static_cast<i128>(kMax) || v < -static_cast<i128>(kMax)) {
    throw ValueError(ValueError::Kind::Overflow,
                     std::string("rational overflow in ") + op);
  }
  return static_cast<long long>(v);
}

Rational reduce(i128 num, i128 den, const char* op) {
  if (den == 0) {
    throw ValueError(ValueError::Kind::DivisionByZero, "division by zero");
  }
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 a = num < 0 ? -num : num;
  i128 b = den;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  if (a != 0) {
    num /= a;
    den /= a;
  }
  return Rational::make(narrow(num, op), narrow(den, op));
}

}  // namespace

Rational Rational::make(long long num, long long den) {
  if (den == 0) {
    throw ValueError(ValueError::Kind::DivisionByZero, "zero denominator");
  }
  if (den < 0) {
    num = -num;
    den = -den;
  }
  long long g = std::gcd(num < 0 ? -num : num, den);
  Rational r;
  r.num_ = g ? num / g : 0;
  r.den_ = g ? den / g : 1;
  return r;
}

Rational Rational::operator+(const Rational& o) const {
  return reduce(static_cast<i128>(num_) * o.den_ +
                    static_cast<i128>(o.num_) * den_,
                static_cast<i128>(den_) * o.den_, "add");
}

Rational Rational::operator-(const Rational& o) const {
  return reduce(static_cast<i128>(num_) * o.den_ -
                    static_cast<i128>(o.num_) * den_,
                static_cast<i128>(den_) * o.den_, "subtract");
}

Rational Rational::operator*(const Rational& o) const {
  return reduce(static_cast<i128>(num_) * o.num_,
                static_cast<i128>(den_) * o.den_, "multiply");
}

Rational Rational::operator/(const Rational& o) const {
  if (o.num_ == 0) {
    throw ValueError(ValueError::Kind::DivisionByZero, "division by zero");
  }
  return reduce(static_cast<i128>(num_) * o.den_,
                static_cast<i128>(den_) * o.num_, "divide");
}

Rational Rational::operator-() const {
  Rational r;
  r.num_ = -num_;
  r.den_ = den_;
  return r;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", to_double());
  return buf;
}

std::optional<Rational> Rational::parse(std::string_view text) {
  // Trim surrounding whitespace.
  std::size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  text = text.substr(b, e - b);
  if (text.empty()) return std::nullopt;

  std::size_t i = 0;
  bool neg = false;
  if (text[i] == '+' || text[i] == '-') {
    neg = text[i] == '-';
    ++i;
  }
  if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) {
    return std::nullopt;
  }

  i128 num = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    num = num * 10 + (text[i] - '0');
    if (num > static_cast<i128>(kMax)) return std::nullopt;
    ++i;
  }
  i128 den = 1;
  if (i < text.size() && text[i] == '.') {
    ++i;
    if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) {
      return std::nullopt;
    }
    while (i < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[i]))) {
      num = num * 10 + (text[i] - '0');
      den *= 10;
      if (num > static_cast<i128>(kMax) || den > static_cast<i128>(kMax)) {
        return std::nullopt;
      }
      ++i;
    }
  } else if (i < text.size() && text[i] == '/') {
    ++i;
    if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) {
      return std::nullopt;
    }
    den = 0;
    while (i < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[i]))) {
      den = den * 10 + (text[i] - '0');
      if (den > static_cast<i128>(kMax)) return std::nullopt;
      ++i;
    }
    if (den == 0) return std::nullopt;
  }
  if (i != text.size()) return std::nullopt;
  if (neg) num = -num;
  try {
    return reduce(num, den, "parse");
  } catch (const ValueError&) {
    return std::nullopt;
  }
}

}  // namespace dedcons
