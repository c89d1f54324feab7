#pragma once

// Small exact rationals for measure weights. Numerators and denominators are
// 64-bit; intermediate products go through __int128 and overflow is an error.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "wpd/error.hpp"

namespace wpd {

class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1) { assign(num, den); }

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  std::string str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

  // Accepts "p/q" or a bare integer "p".
  static Rational parse(std::string_view text) {
    auto slash = text.find('/');
    try {
      if (slash == std::string_view::npos) return Rational(std::stoll(std::string(text)), 1);
      return Rational(std::stoll(std::string(text.substr(0, slash))),
                      std::stoll(std::string(text.substr(slash + 1))));
    } catch (const std::logic_error&) {
      throw InvalidArgument("Rational: cannot parse '" + std::string(text) + "'");
    }
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    const std::int64_t g = std::gcd(a.den_, b.den_);
    const __int128 den = static_cast<__int128>(a.den_ / g) * b.den_;
    const __int128 num = static_cast<__int128>(a.num_) * (b.den_ / g) +
                         static_cast<__int128>(b.num_) * (a.den_ / g);
    return from_wide(num, den);
  }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + Rational(-b.num_, b.den_); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }

  friend bool operator==(const Rational&, const Rational&) = default;
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }

 private:
  void assign(std::int64_t num, std::int64_t den) {
    if (den == 0) throw InvalidArgument("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    num_ = g ? num / g : 0;
    den_ = g ? den / g : 1;
  }

  static Rational from_wide(__int128 num, __int128 den) {
    __int128 a = num < 0 ? -num : num, b = den < 0 ? -den : den;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) {
      num /= a;
      den /= a;
    }
    constexpr __int128 lim = INT64_MAX;
    if (num > lim || -num > lim || den > lim || -den > lim)
      throw CapacityError("Rational: 64-bit overflow", 0);
    return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// lcm with an explicit cap; throws CapacityError naming the offending value.
inline std::int64_t capped_lcm(std::int64_t a, std::int64_t b, std::int64_t cap) {
  const __int128 l = static_cast<__int128>(a / std::gcd(a, b)) * b;
  if (l > cap) {
    const std::int64_t shown = l > INT64_MAX ? INT64_MAX : static_cast<std::int64_t>(l);
    throw CapacityError("common denominator " + std::to_string(shown) + " exceeds cap " +
                            std::to_string(cap),
                        shown);
  }
  return static_cast<std::int64_t>(l);
}

/// Smallest-denominator rational (denominator <= max_den) whose conversion
/// back to double reproduces `value` bit for bit, if one exists.
inline std::optional<Rational> exact_rational(double value, std::int64_t max_den) {
  if (!std::isfinite(value)) return std::nullopt;
  // Walks the continued-fraction convergents.
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = value;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(x);
    if (std::abs(a) > 9e15) break;
    const auto ai = static_cast<std::int64_t>(a);
    const __int128 h2 = static_cast<__int128>(ai) * h1 + h0;
    const __int128 k2 = static_cast<__int128>(ai) * k1 + k0;
    if (k2 > max_den || h2 > INT64_MAX || h2 < INT64_MIN) break;
    h0 = h1;
    k0 = k1;
    h1 = static_cast<std::int64_t>(h2);
    k1 = static_cast<std::int64_t>(k2);
    // A few ulps absorb the rounding of double arithmetic on the fraction.
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - value) <=
        4 * std::numeric_limits<double>::epsilon() * std::abs(value))
      return Rational(h1, k1);
    const double frac = x - a;
    if (frac == 0.0) break;
    x = 1.0 / frac;
  }
  return std::nullopt;
}

}  // namespace wpd
