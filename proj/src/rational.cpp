#include "hcpack/rational.hpp"

#include <limits>
#include <ostream>
#include <stdexcept>

namespace hcp {

Rat::Rat(long num, long den) : Rat(BigInt(num), BigInt(den)) {}

Rat::Rat(const BigInt& num, const BigInt& den) {
  if (den == 0) throw std::invalid_argument("Rat: zero denominator");
  v_ = mpq_class(num, den);
  v_.canonicalize();
}

namespace {

bool valid_integer_text(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

}  // namespace

BigInt parse_big(std::string_view text) {
  if (!valid_integer_text(text))
    throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
  return BigInt(std::string(text), 10);
}

std::string big_str(const BigInt& n) { return n.get_str(10); }

Rat Rat::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rat(parse_big(text));
  auto num = parse_big(text.substr(0, slash));
  auto den_text = text.substr(slash + 1);
  if (!den_text.empty() && den_text[0] == '-')
    throw std::invalid_argument("rational denominator must be positive: '" +
                                std::string(text) + "'");
  auto den = parse_big(den_text);
  if (den == 0) throw std::invalid_argument("zero denominator: '" + std::string(text) + "'");
  return Rat(num, den);
}

std::string Rat::str() const { return big_str(v_.get_num()) + "/" + big_str(v_.get_den()); }

Rat Rat::pow(unsigned e) const {
  mpq_class r;
  mpz_pow_ui(r.get_num_mpz_t(), v_.get_num_mpz_t(), e);
  mpz_pow_ui(r.get_den_mpz_t(), v_.get_den_mpz_t(), e);
  return Rat(std::move(r));
}

Rat Rat::reciprocal() const {
  if (is_zero()) throw std::domain_error("Rat: reciprocal of zero");
  return Rat(den(), num());
}

BigInt Rat::ceil() const {
  BigInt q;
  mpz_cdiv_q(q.get_mpz_t(), v_.get_num_mpz_t(), v_.get_den_mpz_t());
  return q;
}

BigInt Rat::floor() const {
  BigInt q;
  mpz_fdiv_q(q.get_mpz_t(), v_.get_num_mpz_t(), v_.get_den_mpz_t());
  return q;
}

Rat& Rat::operator/=(const Rat& o) {
  if (o.is_zero()) throw std::domain_error("Rat: division by zero");
  v_ /= o.v_;
  return *this;
}

std::ostream& operator<<(std::ostream& os, const Rat& r) { return os << r.str(); }

BigInt ipow(const BigInt& base, unsigned e) {
  BigInt r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
  return r;
}

BigInt ipow(long base, unsigned e) { return ipow(BigInt(base), e); }

std::size_t to_size(const BigInt& n) {
  if (n < 0 || !n.fits_ulong_p() ||
      n.get_ui() > std::numeric_limits<std::size_t>::max())
    throw std::overflow_error("value " + big_str(n) + " does not fit in size_t");
  return static_cast<std::size_t>(n.get_ui());
}

}  // namespace hcp
