#pragma once

#include <complex>

#include "qgl/expr.hpp"

namespace qgl {

// Complex-valued expression as an explicit (re, im) pair of scalar trees.
struct CExpr {
  ExprId re = kNoExpr;
  ExprId im = kNoExpr;

  bool operator==(const CExpr&) const = default;
  bool is_real() const { return ex_is_zero(im); }
};

CExpr cx_of(ExprId real);
CExpr cx_zero();
CExpr cx_one();
CExpr cx_i();

CExpr cx_neg(const CExpr& a);
CExpr cx_conj(const CExpr& a);
CExpr cx_add(const CExpr& a, const CExpr& b);
CExpr cx_sub(const CExpr& a, const CExpr& b);
CExpr cx_mul(const CExpr& a, const CExpr& b);
// Division: real divisors divide componentwise; otherwise multiply by the
// conjugate and divide by |b|^2.
CExpr cx_div(const CExpr& a, const CExpr& b);
// e^z = e^re(z) * (cos(im z) + i sin(im z))
CExpr cx_exp(const CExpr& a);
// z^k by repeated multiplication (k may be negative).
CExpr cx_pow_int(const CExpr& a, long long k);

CExpr cx_subst(const CExpr& a, const SubstMap& map);
std::complex<double> cx_eval(const CExpr& a, const VarMap& vars);
std::string cx_str(const CExpr& a);

}  // namespace qgl
