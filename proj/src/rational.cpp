#include "qgl/rational.hpp"

#include <cmath>
#include <numeric>

namespace qgl {

namespace {

using i128 = __int128;

bool fits64(i128 v) {
  return v >= INT64_MIN && v <= INT64_MAX;
}

std::optional<Rational> make_checked(i128 n, i128 d) {
  if (d == 0) return std::nullopt;
  if (d < 0) {
    n = -n;
    d = -d;
  }
  i128 an = n < 0 ? -n : n;
  i128 g = 1;
  {
    i128 x = an, y = d;
    while (y != 0) {
      i128 t = x % y;
      x = y;
      y = t;
    }
    g = x == 0 ? 1 : x;
  }
  n /= g;
  d /= g;
  if (!fits64(n) || !fits64(d)) return std::nullopt;
  return Rational{static_cast<long long>(n), static_cast<long long>(d)};
}

}  // namespace

Rational Rational::of(long long n, long long d) {
  auto r = make_checked(n, d);
  return r ? *r : Rational{0, 1};
}

std::optional<Rational> rat_add(const Rational& a, const Rational& b) {
  return make_checked(i128(a.num) * b.den + i128(b.num) * a.den,
                      i128(a.den) * b.den);
}

std::optional<Rational> rat_sub(const Rational& a, const Rational& b) {
  return make_checked(i128(a.num) * b.den - i128(b.num) * a.den,
                      i128(a.den) * b.den);
}

std::optional<Rational> rat_mul(const Rational& a, const Rational& b) {
  return make_checked(i128(a.num) * b.num, i128(a.den) * b.den);
}

std::optional<Rational> rat_div(const Rational& a, const Rational& b) {
  if (b.is_zero()) return std::nullopt;
  return make_checked(i128(a.num) * b.den, i128(a.den) * b.num);
}

Rational rat_neg(const Rational& a) { return {-a.num, a.den}; }

std::optional<Rational> rat_pow(const Rational& a, long long k) {
  if (k < 0) {
    if (a.is_zero()) return std::nullopt;
    auto inv = rat_div(Rational{1, 1}, a);
    if (!inv) return std::nullopt;
    return rat_pow(*inv, -k);
  }
  if (k > 64) return std::nullopt;
  Rational acc{1, 1};
  for (long long i = 0; i < k; ++i) {
    auto r = rat_mul(acc, a);
    if (!r) return std::nullopt;
    acc = *r;
  }
  return acc;
}

namespace {
std::optional<long long> isqrt_exact(long long v) {
  if (v < 0) return std::nullopt;
  long long r = static_cast<long long>(std::llround(std::sqrt(double(v))));
  for (long long c = std::max(0ll, r - 2); c <= r + 2; ++c)
    if (c * c == v) return c;
  return std::nullopt;
}
}  // namespace

std::optional<Rational> rat_sqrt(const Rational& a) {
  if (a.negative()) return std::nullopt;
  auto n = isqrt_exact(a.num);
  auto d = isqrt_exact(a.den);
  if (!n || !d) return std::nullopt;
  return Rational{*n, *d};
}

int rat_cmp(const Rational& a, const Rational& b) {
  i128 l = i128(a.num) * b.den;
  i128 r = i128(b.num) * a.den;
  return l < r ? -1 : (l > r ? 1 : 0);
}

std::string rat_str(const Rational& a) {
  if (a.den == 1) return std::to_string(a.num);
  return std::to_string(a.num) + "/" + std::to_string(a.den);
}

bool Number::operator==(const Number& o) const {
  if (exact != o.exact) return false;
  if (exact) return rat == o.rat;
  // bit comparison keeps hashing consistent for NaN/-0.0 payloads
  return std::bit_cast<uint64_t>(approx) == std::bit_cast<uint64_t>(o.approx);
}

std::optional<PiValue> pival_add(const PiValue& a, const PiValue& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.pi_pow != b.pi_pow) return std::nullopt;
  auto c = rat_add(a.coeff, b.coeff);
  if (!c) return std::nullopt;
  return PiValue::of(*c, a.pi_pow);
}

std::optional<PiValue> pival_sub(const PiValue& a, const PiValue& b) {
  return pival_add(a, pival_neg(b));
}

std::optional<PiValue> pival_mul(const PiValue& a, const PiValue& b) {
  auto c = rat_mul(a.coeff, b.coeff);
  if (!c) return std::nullopt;
  return PiValue::of(*c, a.pi_pow + b.pi_pow);
}

std::optional<PiValue> pival_div(const PiValue& a, const PiValue& b) {
  if (b.is_zero()) return std::nullopt;
  auto c = rat_div(a.coeff, b.coeff);
  if (!c) return std::nullopt;
  return PiValue::of(*c, a.pi_pow - b.pi_pow);
}

PiValue pival_neg(const PiValue& a) {
  return {rat_neg(a.coeff), a.pi_pow};
}

std::optional<PiValue> pival_pow(const PiValue& a, long long k) {
  auto c = rat_pow(a.coeff, k);
  if (!c) return std::nullopt;
  long long p = static_cast<long long>(a.pi_pow) * k;
  if (p < -64 || p > 64) return std::nullopt;
  if (a.is_zero() && k <= 0) return std::nullopt;
  return PiValue::of(*c, static_cast<int>(p));
}

double pival_to_double(const PiValue& a) {
  double v = a.coeff.to_double();
  for (int i = 0; i < a.pi_pow; ++i) v *= M_PI;
  for (int i = 0; i > a.pi_pow; --i) v /= M_PI;
  return v;
}

}  // namespace qgl
