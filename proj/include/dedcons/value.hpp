#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dedcons {

/// Raised by exact-arithmetic operations that cannot produce a value.
struct ValueError : std::runtime_error {
  enum class Kind { DivisionByZero, Overflow, Parse };
  Kind kind;
  ValueError(Kind k, const std::string& what)
      : std::runtime_error(what), kind(k) {}
};

/// Exact rational number. Arithmetic over integer inputs never rounds;
/// division is carried as a reduced fraction. Overflow past 64-bit
/// numerator/denominator raises ValueError rather than silently wrapping.
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(long long n) : num_(n), den_(1) {}
  static Rational make(long long num, long long den);

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;
  Rational operator-() const;

  bool operator==(const Rational& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }
  bool operator!=(const Rational& o) const { return !(*this == o); }

  long long num() const { return num_; }
  long long den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  bool is_negative() const { return num_ < 0; }
  bool is_integer() const { return den_ == 1; }
  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  /// Canonical rendering: exact integer when the denominator is 1, else a
  /// decimal with up to six significant digits.
  std::string str() const;

  /// Exact parse of an integer, plain decimal ("25.5") or fraction ("12/7").
  /// Returns nullopt on anything else.
  static std::optional<Rational> parse(std::string_view text);

 private:
  long long num_;
  long long den_;
};

}  // namespace dedcons
