#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "qgl/cexpr.hpp"
#include "qgl/expr.hpp"
#include "qgl/lower.hpp"
#include "qgl/parser.hpp"

using namespace qgl;

namespace {

ExprId reparse(const std::string& vars, ExprId e) {
  std::string src = "utry W(" + vars + ") { " + expr_str(e) + " }";
  ParsedFile f = parse_gates(src);
  return lower_file(f).front().matrix.at(0, 0).re;
}

double fd(ExprId e, SymId var, VarMap pt, double h = 1e-6) {
  double x = pt.at(var);
  pt[var] = x + h;
  double up = eval_scalar(e, pt);
  pt[var] = x - h;
  return (up - eval_scalar(e, pt)) / (2 * h);
}

}  // namespace

TEST_CASE("rational arithmetic is exact and overflow-aware") {
  Rational half = Rational::of(1, 2);
  Rational third = Rational::of(2, 6);
  CHECK(third == Rational::of(1, 3));
  CHECK(rat_add(half, third) == Rational::of(5, 6));
  CHECK(rat_mul(half, third) == Rational::of(1, 6));
  CHECK(rat_sub(half, half) == Rational::of(0));
  CHECK(rat_div(half, third) == Rational::of(3, 2));
  CHECK(rat_neg(Rational::of(-2, 4)) == half);
  CHECK(rat_pow(Rational::of(2, 3), 3) == Rational::of(8, 27));
  CHECK(rat_pow(Rational::of(2), -2) == Rational::of(1, 4));
  CHECK(rat_sqrt(Rational::of(4, 9)) == Rational::of(2, 3));
  CHECK(!rat_sqrt(Rational::of(2)).has_value());
  CHECK(!rat_sqrt(Rational::of(1, 5)).has_value());
  CHECK(rat_cmp(Rational::of(1, 3), half) < 0);
  CHECK(rat_cmp(half, half) == 0);

  long long big = std::numeric_limits<long long>::max();
  CHECK(!rat_add(Rational::of(big), Rational::of(big)).has_value());
  CHECK(!rat_mul(Rational::of(big), Rational::of(3)).has_value());
  // comparison never overflows even when cross-products would
  CHECK(rat_cmp(Rational::of(big, big - 1), Rational::of(big - 1, big)) > 0);
}

TEST_CASE("pi-values track powers of pi exactly") {
  PiValue half_pi = PiValue::of(Rational::of(1, 2), 1);
  PiValue two = PiValue::of(Rational::of(2));
  CHECK(pival_mul(half_pi, two) == PiValue::of(Rational::of(1), 1));
  CHECK(pival_mul(half_pi, half_pi) == PiValue::of(Rational::of(1, 4), 2));
  CHECK(pival_div(half_pi, half_pi) == PiValue::of(Rational::of(1)));
  CHECK(!pival_add(half_pi, two).has_value());  // mixed powers stay symbolic
  CHECK(pival_add(half_pi, half_pi) == PiValue::of(Rational::of(1), 1));
  CHECK(pival_to_double(half_pi) == doctest::Approx(M_PI / 2));
  CHECK(pival_pow(half_pi, 2) == PiValue::of(Rational::of(1, 4), 2));
}

TEST_CASE("expressions are hash-consed") {
  ExprId x = ex_var("x"), y = ex_var("y");
  CHECK(x == ex_var("x"));
  CHECK(x != y);
  CHECK(ex_add(x, y) == ex_add(x, y));
  CHECK(ex_add(x, y) != ex_add(y, x));
  const ExprNode& n = expr_node(ex_add(x, y));
  CHECK(n.op == Op::Add);
  CHECK(n.a == x);
  CHECK(n.b == y);
  CHECK(sym_name(expr_node(x).payload) == "x");
}

TEST_CASE("folding constructors simplify soundly") {
  ExprId x = ex_var("x");

  CHECK(ex_add(x, ex_zero()) == x);
  CHECK(ex_add(ex_zero(), x) == x);
  CHECK(ex_mul(x, ex_one()) == x);
  CHECK(ex_mul(x, ex_zero()) == ex_zero());
  CHECK(ex_sub(x, ex_zero()) == x);
  CHECK(ex_div(x, ex_one()) == x);
  CHECK(ex_neg(ex_neg(x)) == x);

  CHECK(ex_add(ex_int(2), ex_int(3)) == ex_int(5));
  CHECK(ex_mul(ex_rat(Rational::of(1, 2)), ex_int(4)) == ex_int(2));
  CHECK(ex_div(ex_int(1), ex_int(3)) == ex_rat(Rational::of(1, 3)));
  CHECK(ex_pow(ex_int(2), ex_int(10)) == ex_int(1024));
  CHECK(ex_pow(x, ex_one()) == x);
  CHECK(ex_pow(x, ex_zero()) == ex_one());  // 0^0 == 1, same as evaluation
  CHECK(ex_sqrt(ex_int(4)) == ex_int(2));
  CHECK(expr_node(ex_sqrt(ex_int(2))).op == Op::Sqrt);

  CHECK(ex_sin(ex_zero()) == ex_zero());
  CHECK(ex_cos(ex_zero()) == ex_one());
  CHECK(ex_sin(ex_div(ex_pi(), ex_int(2))) == ex_one());
  CHECK(ex_cos(ex_pi()) == ex_neg(ex_one()));
  CHECK(ex_sin(ex_div(ex_pi(), ex_int(4))) ==
        ex_div(ex_one(), ex_sqrt(ex_int(2))));
  CHECK(ex_sin(ex_neg(x)) == ex_neg(ex_sin(x)));
  CHECK(ex_cos(ex_neg(x)) == ex_cos(x));

  CHECK(ex_exp(ex_zero()) == ex_one());
  CHECK(ex_ln(ex_one()) == ex_zero());
}

TEST_CASE("raw construction bypasses folding") {
  ExprId x = ex_var("x");
  ExprId raw = ex_raw(Op::Add, x, ex_zero());
  CHECK(raw != x);
  CHECK(expr_node(raw).op == Op::Add);
  CHECK(ex_raw(Op::Add, x, ex_zero()) == raw);  // still hash-consed
  ExprId raw_sin = ex_raw(Op::Sin, ex_raw(Op::Neg, x));
  CHECK(expr_node(raw_sin).op == Op::Sin);
  CHECK(eval_scalar(raw_sin, {{expr_node(x).payload, 0.7}}) ==
        doctest::Approx(std::sin(-0.7)));
}

TEST_CASE("exact_value covers the coeff * pi^k domain") {
  ExprId x = ex_var("x");
  CHECK(exact_value(ex_int(5)) == PiValue::of(Rational::of(5)));
  CHECK(exact_value(ex_div(ex_pi(), ex_int(2))) ==
        PiValue::of(Rational::of(1, 2), 1));
  CHECK(exact_value(ex_mul(ex_pi(), ex_pi())) ==
        PiValue::of(Rational::of(1), 2));
  CHECK(exact_value(ex_raw(Op::Add, ex_int(2), ex_int(2))) ==
        PiValue::of(Rational::of(4)));
  CHECK(!exact_value(x).has_value());
  CHECK(!exact_value(ex_add(x, ex_one())).has_value());
  CHECK(ex_is_zero(ex_zero()));
  CHECK(ex_is_one(ex_one()));
  CHECK(ex_is_exact_rat(ex_rat(Rational::of(3, 7)), Rational::of(3, 7)));
  CHECK(ex_int_value(ex_int(-4)) == -4);
  CHECK(!ex_int_value(x).has_value());
}

TEST_CASE("free variables appear in first-use order") {
  ExprId x = ex_var("x"), y = ex_var("y"), z = ex_var("z");
  ExprId e = ex_add(ex_mul(y, x), ex_sub(z, y));
  std::vector<SymId> order;
  free_vars(e, order);
  REQUIRE(order.size() == 3);
  CHECK(sym_name(order[0]) == "y");
  CHECK(sym_name(order[1]) == "x");
  CHECK(sym_name(order[2]) == "z");
  CHECK(contains_var(e, order[2]));
  CHECK(!contains_var(ex_add(x, y), sym_intern("z")));
  CHECK(expr_size(ex_add(x, y)) == 3);
}

TEST_CASE("eval_scalar matches direct computation and flags domain errors") {
  ExprId x = ex_var("x"), y = ex_var("y");
  SymId sx = expr_node(x).payload, sy = expr_node(y).payload;
  VarMap pt{{sx, 1.3}, {sy, -0.4}};

  ExprId e = ex_add(ex_mul(ex_sin(x), ex_exp(ex_mul(x, y))),
                    ex_pow(ex_cos(y), ex_int(3)));
  double want = std::sin(1.3) * std::exp(1.3 * -0.4) + std::pow(std::cos(-0.4), 3);
  CHECK(eval_scalar(e, pt) == doctest::Approx(want).epsilon(1e-12));

  CHECK(eval_scalar(ex_pi(), {}) == doctest::Approx(M_PI));
  CHECK(eval_scalar(ex_pow(x, y), {{sx, 2.0}, {sy, 0.5}}) ==
        doctest::Approx(std::sqrt(2.0)));

  CHECK_THROWS_AS(eval_scalar(ex_ln(x), {{sx, -1.0}}), EvalError);
  CHECK_THROWS_AS(eval_scalar(ex_sqrt(x), {{sx, -1.0}}), EvalError);
  CHECK_THROWS_AS(eval_scalar(ex_div(ex_one(), x), {{sx, 0.0}}), EvalError);
  CHECK_THROWS_AS(eval_scalar(ex_pow(x, y), {{sx, -2.0}, {sy, 0.5}}), EvalError);
  CHECK_THROWS_AS(eval_scalar(x, {}), EvalError);
}

TEST_CASE("substitution is simultaneous") {
  ExprId x = ex_var("x"), y = ex_var("y");
  SymId sx = expr_node(x).payload, sy = expr_node(y).payload;

  ExprId e = ex_add(ex_pow(x, ex_int(2)), x);
  ExprId img = ex_add(y, ex_one());
  ExprId s = substitute(e, {{sx, img}});
  VarMap pt{{sy, 2.5}};
  CHECK(eval_scalar(s, pt) == doctest::Approx(3.5 * 3.5 + 3.5));

  // swap: no sequential contamination
  ExprId swapped = substitute(ex_sub(x, y), {{sx, y}, {sy, x}});
  CHECK(eval_scalar(swapped, {{sx, 1.0}, {sy, 10.0}}) == doctest::Approx(9.0));

  CHECK(substitute(e, {{sy, ex_one()}}) == e);  // untouched tree comes back as-is
}

TEST_CASE("differentiation agrees with central differences") {
  ExprId x = ex_var("x"), y = ex_var("y");
  SymId sx = expr_node(x).payload, sy = expr_node(y).payload;

  CHECK(differentiate(ex_sin(x), sx) == ex_cos(x));
  CHECK(differentiate(ex_int(7), sx) == ex_zero());
  CHECK(differentiate(y, sx) == ex_zero());

  std::vector<ExprId> cases = {
      ex_mul(ex_sin(ex_mul(x, y)), ex_cos(x)),
      ex_exp(ex_mul(x, x)),
      ex_div(ex_sin(x), ex_add(ex_cos(y), ex_int(2))),
      ex_pow(ex_add(ex_mul(x, x), ex_one()), ex_int(3)),
      ex_ln(ex_add(ex_exp(x), ex_one())),
      ex_sqrt(ex_add(ex_mul(x, x), ex_one())),
  };
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  for (ExprId e : cases) {
    ExprId dx = differentiate(e, sx);
    for (int rep = 0; rep < 20; ++rep) {
      VarMap pt{{sx, d(rng)}, {sy, d(rng)}};
      double got = eval_scalar(dx, pt);
      double want = fd(e, sx, pt);
      CHECK(got == doctest::Approx(want).epsilon(1e-5));
    }
  }

  // chain through both slots of pow
  ExprId g = ex_pow(ex_add(ex_mul(x, x), ex_int(2)), ex_sin(y));
  for (SymId s : {sx, sy}) {
    ExprId dg = differentiate(g, s);
    VarMap pt{{sx, 0.8}, {sy, 1.1}};
    CHECK(eval_scalar(dg, pt) == doctest::Approx(fd(g, s, pt)).epsilon(1e-5));
  }
}

TEST_CASE("printed expressions reparse to the same tree") {
  ExprId x = ex_var("x"), y = ex_var("y"), z = ex_var("z");
  std::vector<ExprId> cases = {
      ex_sub(x, ex_sub(y, z)),
      ex_sub(ex_sub(x, y), z),
      ex_raw(Op::Pow, x, ex_raw(Op::Pow, y, z)),
      ex_raw(Op::Pow, ex_raw(Op::Pow, x, y), z),
      ex_neg(ex_add(x, y)),
      ex_mul(ex_add(x, y), ex_sub(x, z)),
      ex_div(ex_div(x, y), z),
      ex_sin(ex_add(ex_div(ex_pi(), ex_int(3)), x)),
      ex_mul(ex_rat(Rational::of(3, 4)), ex_sqrt(ex_add(x, ex_one()))),
      ex_pow(x, ex_neg(y)),
      ex_exp(ex_ln(ex_add(x, ex_int(2)))),
  };
  for (ExprId e : cases) {
    CAPTURE(expr_str(e));
    CHECK(reparse("x, y, z", e) == e);
  }

  // Reparsing may rebuild a different (equal) tree when lowering takes the
  // complex-division path; the value round-trips regardless.
  std::vector<ExprId> value_cases = cases;
  value_cases.push_back(ex_div(x, ex_div(y, z)));
  value_cases.push_back(ex_raw(Op::Neg, ex_raw(Op::Neg, x)));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.5, 2.0);
  for (ExprId e : value_cases) {
    ExprId r = reparse("x, y, z", e);
    for (int rep = 0; rep < 10; ++rep) {
      VarMap pt{{sym_intern("x"), d(rng)},
                {sym_intern("y"), d(rng)},
                {sym_intern("z"), d(rng)}};
      CHECK(eval_scalar(r, pt) ==
            doctest::Approx(eval_scalar(e, pt)).epsilon(1e-12));
    }
  }
}

TEST_CASE("complex expression algebra") {
  ExprId x = ex_var("x");
  SymId sx = expr_node(x).payload;
  CExpr z{ex_cos(x), ex_sin(x)};  // e^{ix}

  VarMap pt{{sx, 0.9}};
  CHECK(std::abs(cx_eval(cx_mul(z, cx_conj(z)), pt).imag()) < 1e-15);
  std::complex<double> zv = cx_eval(z, pt);
  CHECK(std::abs(cx_eval(cx_mul(z, z), pt) - zv * zv) < 1e-12);
  CHECK(std::abs(cx_eval(cx_div(cx_one(), z), pt) - 1.0 / zv) < 1e-12);
  CHECK(std::abs(cx_eval(cx_exp(CExpr{ex_zero(), x}), pt) -
                 std::polar(1.0, 0.9)) < 1e-12);
  CHECK(std::abs(cx_eval(cx_pow_int(z, -3), pt) - std::pow(zv, -3)) < 1e-12);
  CHECK(cx_eval(cx_i(), {}) == std::complex<double>(0, 1));
  CHECK(cx_sub(z, z).is_real());
}
