#pragma once

#include <string>
#include <vector>

#include "qgl/lower.hpp"
#include "qgl/parser.hpp"

namespace support {

// A scalar identity written twice in QGL expression syntax. Both sides are
// lowered with the same declared variable list so they can be compared as
// 1x1 matrices. Complex-valued sides are fine: the comparison covers both
// components.
struct Identity {
  const char* name;
  const char* vars;
  const char* lhs;
  const char* rhs;
};

inline qgl::UnitaryExprMatrix lower_scalar(const std::string& vars,
                                           const std::string& body) {
  std::string src = "utry IDENT(" + vars + ") { " + body + " }";
  qgl::ParsedFile f = qgl::parse_gates(src);
  return qgl::lower_file(f).front().matrix;
}

inline const std::vector<Identity>& identity_corpus() {
  static const std::vector<Identity> v = {
      // angle sums and differences
      {"sin-sum", "x, y", "sin(x + y)", "sin(x)*cos(y) + cos(x)*sin(y)"},
      {"cos-sum", "x, y", "cos(x + y)", "cos(x)*cos(y) - sin(x)*sin(y)"},
      {"sin-diff", "x, y", "sin(x - y)", "sin(x)*cos(y) - cos(x)*sin(y)"},
      {"cos-diff", "x, y", "cos(x - y)", "cos(x)*cos(y) + sin(x)*sin(y)"},
      // double angles
      {"sin-double", "x", "sin(2*x)", "2*sin(x)*cos(x)"},
      {"cos-double-cs", "x", "cos(2*x)", "cos(x)^2 - sin(x)^2"},
      {"cos-double-c", "x", "cos(2*x)", "2*cos(x)^2 - 1"},
      {"cos-double-s", "x", "cos(2*x)", "1 - 2*sin(x)^2"},
      // power reduction and half angles
      {"power-reduce-sin", "x", "sin(x)^2", "(1 - cos(2*x)) / 2"},
      {"power-reduce-cos", "x", "cos(x)^2", "(1 + cos(2*x)) / 2"},
      {"half-angle-sin", "x", "sin(x/2)^2", "(1 - cos(x)) / 2"},
      {"half-angle-cos", "x", "cos(x/2)^2", "(1 + cos(x)) / 2"},
      // pythagorean forms
      {"pythag", "x", "sin(x)^2 + cos(x)^2", "1"},
      {"pythag-sin", "x", "1 - sin(x)^2", "cos(x)^2"},
      {"pythag-cos", "x", "1 - cos(x)^2", "sin(x)^2"},
      {"pythag-mul", "x", "sin(x)*sin(x) + cos(x)*cos(x)", "1"},
      // products to sums
      {"prod-sinsin", "x, y", "sin(x)*sin(y)", "(cos(x - y) - cos(x + y)) / 2"},
      {"prod-coscos", "x, y", "cos(x)*cos(y)", "(cos(x - y) + cos(x + y)) / 2"},
      {"prod-sincos", "x, y", "sin(x)*cos(y)", "(sin(x + y) + sin(x - y)) / 2"},
      // parity and shifts
      {"sin-odd", "x", "sin(~x)", "~sin(x)"},
      {"cos-even", "x", "cos(~x)", "cos(x)"},
      {"sin-shift-half", "x", "sin(x + π/2)", "cos(x)"},
      {"cos-shift-pi", "x", "cos(x + π)", "~cos(x)"},
      {"sin-quarter-pi", "x", "sin(π/4)", "1 / sqrt(2)"},
      // real exponentials
      {"exp-sum", "x, y", "exp(x) * exp(y)", "exp(x + y)"},
      {"exp-cancel", "x", "exp(~x) * exp(x)", "1"},
      {"ln-exp", "x", "ln(exp(x))", "x"},
      // complex exponentials
      {"euler-prod", "x, y", "e^(i*x) * e^(i*y)", "e^(i*(x + y))"},
      {"euler-cancel", "x", "e^(i*x) * e^(i*~x)", "1"},
      {"euler-square", "x", "e^(i*x) * e^(i*x)", "e^(i*(2*x))"},
      {"euler-cos", "x", "e^(i*x) + e^(i*~x)", "2*cos(x)"},
      {"euler-sin", "x", "e^(i*x) - e^(i*~x)", "2*i*sin(x)"},
  };
  return v;
}

}  // namespace support
