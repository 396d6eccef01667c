#include "qgl/cexpr.hpp"

namespace qgl {

CExpr cx_of(ExprId real) { return {real, ex_zero()}; }

CExpr cx_zero() { return cx_of(ex_zero()); }

CExpr cx_one() { return cx_of(ex_one()); }

CExpr cx_i() { return {ex_zero(), ex_one()}; }

CExpr cx_neg(const CExpr& a) { return {ex_neg(a.re), ex_neg(a.im)}; }

CExpr cx_conj(const CExpr& a) { return {a.re, ex_neg(a.im)}; }

CExpr cx_add(const CExpr& a, const CExpr& b) {
  return {ex_add(a.re, b.re), ex_add(a.im, b.im)};
}

CExpr cx_sub(const CExpr& a, const CExpr& b) {
  return {ex_sub(a.re, b.re), ex_sub(a.im, b.im)};
}

CExpr cx_mul(const CExpr& a, const CExpr& b) {
  return {ex_sub(ex_mul(a.re, b.re), ex_mul(a.im, b.im)),
          ex_add(ex_mul(a.re, b.im), ex_mul(a.im, b.re))};
}

CExpr cx_div(const CExpr& a, const CExpr& b) {
  if (b.is_real()) return {ex_div(a.re, b.re), ex_div(a.im, b.re)};
  CExpr num = cx_mul(a, cx_conj(b));
  ExprId den = ex_add(ex_mul(b.re, b.re), ex_mul(b.im, b.im));
  return {ex_div(num.re, den), ex_div(num.im, den)};
}

CExpr cx_exp(const CExpr& a) {
  ExprId mag = ex_exp(a.re);
  return {ex_mul(mag, ex_cos(a.im)), ex_mul(mag, ex_sin(a.im))};
}

CExpr cx_pow_int(const CExpr& a, long long k) {
  if (k < 0) return cx_div(cx_one(), cx_pow_int(a, -k));
  CExpr acc = cx_one();
  for (long long j = 0; j < k; ++j) acc = cx_mul(acc, a);
  return acc;
}

CExpr cx_subst(const CExpr& a, const SubstMap& map) {
  return {substitute(a.re, map), substitute(a.im, map)};
}

std::complex<double> cx_eval(const CExpr& a, const VarMap& vars) {
  return {eval_scalar(a.re, vars), eval_scalar(a.im, vars)};
}

std::string cx_str(const CExpr& a) {
  if (a.is_real()) return expr_str(a.re);
  return expr_str(a.re) + " + i*(" + expr_str(a.im) + ")";
}

}  // namespace qgl
