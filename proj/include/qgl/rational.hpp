#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace qgl {

// Exact rational over 64-bit words. Operations that would overflow report
// failure instead of wrapping; callers fall back to floating point.
struct Rational {
  long long num = 0;
  long long den = 1;  // always > 0, gcd(|num|, den) == 1

  static Rational of(long long n, long long d = 1);

  bool is_zero() const { return num == 0; }
  bool is_one() const { return num == 1 && den == 1; }
  bool is_integer() const { return den == 1; }
  bool negative() const { return num < 0; }
  double to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }
  bool operator==(const Rational&) const = default;
};

std::optional<Rational> rat_add(const Rational& a, const Rational& b);
std::optional<Rational> rat_sub(const Rational& a, const Rational& b);
std::optional<Rational> rat_mul(const Rational& a, const Rational& b);
std::optional<Rational> rat_div(const Rational& a, const Rational& b);
Rational rat_neg(const Rational& a);
// a^k for integer k (k < 0 requires a != 0); nullopt on overflow.
std::optional<Rational> rat_pow(const Rational& a, long long k);
// Exact square root if both numerator and denominator are perfect squares.
std::optional<Rational> rat_sqrt(const Rational& a);
// Three-way comparison without overflow.
int rat_cmp(const Rational& a, const Rational& b);
std::string rat_str(const Rational& a);

// A literal constant: exact rational when possible, double otherwise.
struct Number {
  bool exact = true;
  Rational rat;
  double approx = 0.0;

  static Number of_rat(const Rational& r) { return {true, r, r.to_double()}; }
  static Number of_double(double d) { return {false, {}, d}; }
  double to_double() const { return exact ? rat.to_double() : approx; }
  bool operator==(const Number& o) const;
};

// Value domain for constant folding: coeff * pi^pi_pow, exact.
// Keeping pi symbolic keeps folding sound (no float approximation of pi).
struct PiValue {
  Rational coeff;
  int pi_pow = 0;

  static PiValue of(const Rational& r, int p = 0) {
    return {r, r.is_zero() ? 0 : p};
  }
  bool is_zero() const { return coeff.is_zero(); }
  bool is_rational() const { return pi_pow == 0; }
  bool operator==(const PiValue&) const = default;
};

std::optional<PiValue> pival_add(const PiValue& a, const PiValue& b);
std::optional<PiValue> pival_sub(const PiValue& a, const PiValue& b);
std::optional<PiValue> pival_mul(const PiValue& a, const PiValue& b);
std::optional<PiValue> pival_div(const PiValue& a, const PiValue& b);
PiValue pival_neg(const PiValue& a);
std::optional<PiValue> pival_pow(const PiValue& a, long long k);
double pival_to_double(const PiValue& a);

struct PiValueHash {
  size_t operator()(const PiValue& v) const {
    size_t h = std::hash<long long>()(v.coeff.num);
    h = h * 1315423911u ^ std::hash<long long>()(v.coeff.den);
    return h * 2654435761u ^ std::hash<int>()(v.pi_pow);
  }
};

}  // namespace qgl
