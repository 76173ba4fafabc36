#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace hcp {

using BigInt = mpz_class;

/// Exact rational number, always kept in lowest terms with a positive
/// denominator. Backed by GMP's mpq.
class Rat {
 public:
  Rat() = default;
  Rat(long n) : v_(n) {}  // NOLINT(google-explicit-constructor)
  Rat(int n) : v_(static_cast<long>(n)) {}  // NOLINT
  Rat(const BigInt& n) : v_(n) {}  // NOLINT
  Rat(long num, long den);
  Rat(const BigInt& num, const BigInt& den);

  /// Parses "p/q" or "p" (optional leading '-'). Throws std::invalid_argument.
  static Rat parse(std::string_view text);

  BigInt num() const { return v_.get_num(); }
  BigInt den() const { return v_.get_den(); }
  const mpq_class& raw() const { return v_; }

  /// Always "num/den", e.g. "0/1", "-3/4", "2/1".
  std::string str() const;
  double to_double() const { return v_.get_d(); }

  bool is_zero() const { return sgn(v_) == 0; }
  int sign() const { return sgn(v_); }

  Rat pow(unsigned e) const;
  Rat reciprocal() const;
  /// Smallest integer >= this.
  BigInt ceil() const;
  BigInt floor() const;

  Rat& operator+=(const Rat& o) { v_ += o.v_; return *this; }
  Rat& operator-=(const Rat& o) { v_ -= o.v_; return *this; }
  Rat& operator*=(const Rat& o) { v_ *= o.v_; return *this; }
  Rat& operator/=(const Rat& o);

  friend Rat operator+(Rat a, const Rat& b) { return a += b; }
  friend Rat operator-(Rat a, const Rat& b) { return a -= b; }
  friend Rat operator*(Rat a, const Rat& b) { return a *= b; }
  friend Rat operator/(Rat a, const Rat& b) { return a /= b; }
  friend Rat operator-(const Rat& a) { Rat r; r.v_ = -a.v_; return r; }

  friend bool operator==(const Rat& a, const Rat& b) { return cmp(a.v_, b.v_) == 0; }
  friend std::strong_ordering operator<=>(const Rat& a, const Rat& b) {
    int c = cmp(a.v_, b.v_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  friend std::ostream& operator<<(std::ostream& os, const Rat& r);

 private:
  explicit Rat(mpq_class v) : v_(std::move(v)) { v_.canonicalize(); }
  mpq_class v_;
};

/// base^e for integers; 0^0 == 1.
BigInt ipow(const BigInt& base, unsigned e);
BigInt ipow(long base, unsigned e);

/// Converts a BigInt that must fit in a size_t; throws std::overflow_error otherwise.
std::size_t to_size(const BigInt& n);

std::string big_str(const BigInt& n);
BigInt parse_big(std::string_view text);

}  // namespace hcp
