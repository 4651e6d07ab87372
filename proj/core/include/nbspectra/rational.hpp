#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nbspectra {

/// Exact fraction on int64 with overflow-checked arithmetic via __int128.
/// Big enough for the walk-sum oracles, whose numerators stay tiny; throws
/// std::overflow_error instead of wrapping if a computation outgrows it.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(long long num, long long den = 1) : n_(num), d_(den) {
    if (d_ == 0) throw std::invalid_argument("Rational: zero denominator");
    reduce();
  }

  long long num() const { return n_; }
  long long den() const { return d_; }

  double to_double() const { return static_cast<double>(n_) / static_cast<double>(d_); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return make(i128(a.n_) * b.d_ + i128(b.n_) * a.d_, i128(a.d_) * b.d_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return make(i128(a.n_) * b.d_ - i128(b.n_) * a.d_, i128(a.d_) * b.d_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return make(i128(a.n_) * b.n_, i128(a.d_) * b.d_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.n_ == 0) throw std::invalid_argument("Rational: division by zero");
    return make(i128(a.n_) * b.d_, i128(a.d_) * b.n_);
  }
  Rational& operator+=(const Rational& b) { return *this = *this + b; }
  Rational& operator-=(const Rational& b) { return *this = *this - b; }
  Rational& operator*=(const Rational& b) { return *this = *this * b; }
  Rational& operator/=(const Rational& b) { return *this = *this / b; }
  Rational operator-() const { return Rational(-n_, d_); }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.n_ == b.n_ && a.d_ == b.d_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }

  /// Integer power, exponent >= 0.
  Rational pow(int e) const {
    Rational r(1), base = *this;
    for (; e > 0; e >>= 1) {
      if (e & 1) r *= base;
      if (e > 1) base *= base;
    }
    return r;
  }

  std::string str() const {
    return d_ == 1 ? std::to_string(n_)
                   : std::to_string(n_) + "/" + std::to_string(d_);
  }

 private:
  using i128 = __int128;

  static Rational make(i128 n, i128 d) {
    if (d < 0) { n = -n; d = -d; }
    const i128 g = gcd128(n < 0 ? -n : n, d);
    if (g > 1) { n /= g; d /= g; }
    if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
      throw std::overflow_error("Rational: value exceeds 64-bit range");
    Rational r;
    r.n_ = static_cast<long long>(n);
    r.d_ = static_cast<long long>(d);
    return r;
  }

  static i128 gcd128(i128 a, i128 b) {
    while (b != 0) { const i128 t = a % b; a = b; b = t; }
    return a == 0 ? 1 : a;
  }

  void reduce() {
    if (d_ < 0) { n_ = -n_; d_ = -d_; }
    const long long g = std::gcd(n_ < 0 ? -n_ : n_, d_);
    if (g > 1) { n_ /= g; d_ /= g; }
  }

  long long n_ = 0;
  long long d_ = 1;
};

}  // namespace nbspectra
