#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "eqdensity/types.hpp"

namespace eqd {

// Exact rational on int64 with __int128 intermediates. Density values in this
// toolkit keep numerators and denominators well below 2^62; crossing the guard
// means a logic bug upstream, so arithmetic throws instead of saturating.
class Rat {
 public:
  constexpr Rat() = default;
  constexpr Rat(std::int64_t n) : num_(n), den_(1) {}
  Rat(std::int64_t n, std::int64_t d) { assign(n, d); }

  static Rat ratio(Nat count, Nat total) {
    if (total == 0) throw Error("Rat::ratio: zero total");
    return Rat(static_cast<std::int64_t>(count),
               static_cast<std::int64_t>(total));
  }

  // 2^k, k in [-62, 62].
  static Rat pow2(int k) {
    if (k < -62 || k > 62) throw Error("Rat::pow2: exponent out of range");
    if (k >= 0) return Rat(std::int64_t(1) << k);
    Rat r;
    r.num_ = 1;
    r.den_ = std::int64_t(1) << (-k);
    return r;
  }

  static Rat parse(const std::string& text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }

  Rat operator-() const {
    Rat r = *this;
    r.num_ = -r.num_;
    return r;
  }
  Rat operator+(const Rat& o) const {
    return make(w(num_) * o.den_ + w(o.num_) * den_, w(den_) * o.den_);
  }
  Rat operator-(const Rat& o) const {
    return make(w(num_) * o.den_ - w(o.num_) * den_, w(den_) * o.den_);
  }
  Rat operator*(const Rat& o) const {
    return make(w(num_) * o.num_, w(den_) * o.den_);
  }
  Rat operator/(const Rat& o) const {
    if (o.num_ == 0) throw Error("Rat: division by zero");
    return make(w(num_) * o.den_, w(den_) * o.num_);
  }

  bool operator==(const Rat& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }
  bool operator!=(const Rat& o) const { return !(*this == o); }
  bool operator<(const Rat& o) const {
    return w(num_) * o.den_ < w(o.num_) * den_;
  }
  bool operator>(const Rat& o) const { return o < *this; }
  bool operator<=(const Rat& o) const { return !(o < *this); }
  bool operator>=(const Rat& o) const { return !(*this < o); }

  // Always "p/q", so report fields have a single shape.
  std::string str() const {
    return std::to_string(num_) + "/" + std::to_string(den_);
  }
  double approx() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

 private:
  using i128 = __int128;
  static i128 w(std::int64_t v) { return static_cast<i128>(v); }

  static Rat make(i128 n, i128 d) {
    Rat r;
    r.assign_wide(n, d);
    return r;
  }

  void assign(std::int64_t n, std::int64_t d) { assign_wide(w(n), w(d)); }

  void assign_wide(i128 n, i128 d) {
    if (d == 0) throw Error("Rat: zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    i128 a = n < 0 ? -n : n;
    i128 g = gcd128(a, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    const i128 lim = (i128(1) << 62);
    if (n >= lim || n <= -lim || d >= lim)
      throw Error("Rat: overflow past the int64 guard");
    num_ = static_cast<std::int64_t>(n);
    den_ = static_cast<std::int64_t>(d);
  }

  static i128 gcd128(i128 a, i128 b) {
    while (b != 0) {
      i128 t = a % b;
      a = b;
      b = t;
    }
    return a == 0 ? 1 : a;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline Rat Rat::parse(const std::string& text) {
  auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return Rat(std::stoll(text));
    return Rat(std::stoll(text.substr(0, slash)),
               std::stoll(text.substr(slash + 1)));
  } catch (const std::exception&) {
    throw ValidationError("not a rational: '" + text + "'");
  }
}

}  // namespace eqd
