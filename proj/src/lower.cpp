#include "qgl/lower.hpp"

#include <cstdlib>
#include <unordered_map>

#include <fmt/format.h>

namespace qgl {

namespace {

// Intermediate lowering value: a complex scalar or a rectangular matrix.
struct Value {
  CExpr scalar = cx_zero();
  uint32_t rows = 0, cols = 0;  // 0x0 marks a scalar
  std::vector<CExpr> elems;

  bool is_scalar() const { return rows == 0; }
  const CExpr& el(uint32_t r, uint32_t c) const { return elems[r * cols + c]; }
};

Value scalar_val(CExpr e) {
  Value v;
  v.scalar = e;
  return v;
}

[[noreturn]] void err(ParseErrorKind kind, const AstNode& n,
                      const std::string& msg) {
  throw ParseError(kind, n.line, n.col, msg);
}

ExprId lower_const(const AstNode& n) {
  size_t dot = n.text.find('.');
  if (dot == std::string::npos) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(n.text.c_str(), &end, 10);
    if (errno == 0 && end && *end == '\0') return ex_int(v);
    return ex_double(std::strtod(n.text.c_str(), nullptr));
  }
  std::string whole = n.text.substr(0, dot);
  std::string frac = n.text.substr(dot + 1);
  if (whole.size() + frac.size() <= 18) {
    long long num = std::strtoll((whole + frac).c_str(), nullptr, 10);
    long long den = 1;
    for (size_t k = 0; k < frac.size(); ++k) den *= 10;
    return ex_rat(Rational::of(num, den));
  }
  return ex_double(std::strtod(n.text.c_str(), nullptr));
}

class Lowerer {
 public:
  Lowerer(const ParsedFile& file, const GateDef& def)
      : file_(file), def_(def) {
    for (const std::string& v : def.vars) params_[v] = sym_intern(v);
  }

  UnitaryExprMatrix run() {
    Value v = lower(def_.body);
    if (v.is_scalar()) {
      v.rows = v.cols = 1;
      v.elems = {v.scalar};
    }
    const AstNode& body = file_.node(def_.body);
    if (v.rows != v.cols)
      err(ParseErrorKind::DimensionMismatch, body,
          fmt::format("gate body is a {}x{} matrix", v.rows, v.cols));

    UnitaryExprMatrix m;
    m.dim = v.rows;
    m.elems = std::move(v.elems);
    if (!def_.radices.empty()) {
      if (radix_product(def_.radices) != m.dim)
        err(ParseErrorKind::DimensionMismatch, body,
            fmt::format("declared radices imply dimension {}, body has {}",
                        radix_product(def_.radices), m.dim));
      m.radices = def_.radices;
    } else {
      uint32_t d = m.dim;
      if (d == 0 || (d & (d - 1)) != 0)
        err(ParseErrorKind::DimensionMismatch, body,
            fmt::format("dimension {} is not a power of two; declare radices",
                        d));
      while (d > 1) {
        m.radices.push_back(2);
        d >>= 1;
      }
    }
    for (const std::string& v2 : def_.vars) m.params.push_back(params_[v2]);
    return m;
  }

 private:
  const ParsedFile& file_;
  const GateDef& def_;
  std::unordered_map<std::string, SymId> params_;

  CExpr as_scalar(const Value& v, const AstNode& at, const char* what) {
    if (!v.is_scalar())
      err(ParseErrorKind::UnsupportedConstruct, at,
          fmt::format("{} applied to a matrix", what));
    return v.scalar;
  }

  CExpr as_real(const Value& v, const AstNode& at, const char* what) {
    CExpr s = as_scalar(v, at, what);
    if (!s.is_real())
      err(ParseErrorKind::UnsupportedConstruct, at,
          fmt::format("{} of a complex value", what));
    return s;
  }

  Value lower(AstId id) {
    const AstNode& n = file_.node(id);
    switch (n.kind) {
      case AstKind::Var: {
        if (n.text == "i") return scalar_val(cx_i());
        if (n.text == "e") return scalar_val(cx_of(ex_exp(ex_one())));
        if (n.text == "π") return scalar_val(cx_of(ex_pi()));
        auto it = params_.find(n.text);
        if (it == params_.end())
          err(ParseErrorKind::Syntax, n,
              fmt::format("use of undeclared variable '{}'", n.text));
        return scalar_val(cx_of(ex_var(it->second)));
      }
      case AstKind::Const:
        return scalar_val(cx_of(lower_const(n)));
      case AstKind::Call:
        return lower_call(n);
      case AstKind::Matrix:
        return lower_matrix(n);
      case AstKind::Neg: {
        Value a = lower(n.kids[0]);
        if (a.is_scalar()) return scalar_val(cx_neg(a.scalar));
        for (CExpr& e : a.elems) e = cx_neg(e);
        return a;
      }
      case AstKind::Add:
      case AstKind::Sub:
        return lower_addsub(n);
      case AstKind::Mul:
        return lower_mul(n);
      case AstKind::Div:
        return lower_div(n);
      case AstKind::Pow:
        return lower_pow(n);
    }
    err(ParseErrorKind::Syntax, n, "unreachable");
  }

  Value lower_call(const AstNode& n) {
    const std::string& f = n.text;
    auto arity = [&](size_t want) {
      if (n.kids.size() != want)
        err(ParseErrorKind::Syntax, n,
            fmt::format("function '{}' expects {} argument{}", f, want,
                        want == 1 ? "" : "s"));
    };
    if (f == "pow") {
      arity(2);
      Value a = lower(n.kids[0]);
      Value b = lower(n.kids[1]);
      return scalar_val(scalar_pow(as_scalar(a, n, "'pow'"),
                                   as_scalar(b, n, "'pow'"), n));
    }
    if (f == "exp") {
      arity(1);
      return scalar_val(cx_exp(as_scalar(lower(n.kids[0]), n, "'exp'")));
    }
    ExprId x = kNoExpr;
    auto real_arg = [&] {
      arity(1);
      x = as_real(lower(n.kids[0]), n, fmt::format("'{}'", f).c_str()).re;
    };
    if (f == "sin") { real_arg(); return scalar_val(cx_of(ex_sin(x))); }
    if (f == "cos") { real_arg(); return scalar_val(cx_of(ex_cos(x))); }
    if (f == "tan") {
      real_arg();
      return scalar_val(cx_of(ex_div(ex_sin(x), ex_cos(x))));
    }
    if (f == "sec") {
      real_arg();
      return scalar_val(cx_of(ex_div(ex_one(), ex_cos(x))));
    }
    if (f == "csc") {
      real_arg();
      return scalar_val(cx_of(ex_div(ex_one(), ex_sin(x))));
    }
    if (f == "cot") {
      real_arg();
      return scalar_val(cx_of(ex_div(ex_cos(x), ex_sin(x))));
    }
    if (f == "ln") { real_arg(); return scalar_val(cx_of(ex_ln(x))); }
    if (f == "sqrt") { real_arg(); return scalar_val(cx_of(ex_sqrt(x))); }
    err(ParseErrorKind::UnsupportedConstruct, n,
        fmt::format("unknown function '{}'", f));
  }

  Value lower_matrix(const AstNode& n) {
    Value m;
    m.rows = static_cast<uint32_t>(n.row_lens.size());
    m.cols = n.row_lens[0];
    for (uint32_t len : n.row_lens)
      if (len != m.cols)
        err(ParseErrorKind::DimensionMismatch, n,
            "matrix rows have different lengths");
    m.elems.reserve(n.kids.size());
    for (AstId kid : n.kids) {
      Value v = lower(kid);
      if (!v.is_scalar())
        err(ParseErrorKind::UnsupportedConstruct, file_.node(kid),
            "matrix element is itself a matrix");
      m.elems.push_back(v.scalar);
    }
    return m;
  }

  Value lower_addsub(const AstNode& n) {
    Value a = lower(n.kids[0]);
    Value b = lower(n.kids[1]);
    bool add = n.kind == AstKind::Add;
    if (a.is_scalar() && b.is_scalar())
      return scalar_val(add ? cx_add(a.scalar, b.scalar)
                            : cx_sub(a.scalar, b.scalar));
    if (a.is_scalar() || b.is_scalar())
      err(ParseErrorKind::DimensionMismatch, n,
          "cannot add a scalar to a matrix");
    if (a.rows != b.rows || a.cols != b.cols)
      err(ParseErrorKind::DimensionMismatch, n,
          fmt::format("cannot {} {}x{} and {}x{} matrices",
                      add ? "add" : "subtract", a.rows, a.cols, b.rows,
                      b.cols));
    for (size_t k = 0; k < a.elems.size(); ++k)
      a.elems[k] = add ? cx_add(a.elems[k], b.elems[k])
                       : cx_sub(a.elems[k], b.elems[k]);
    return a;
  }

  Value lower_mul(const AstNode& n) {
    Value a = lower(n.kids[0]);
    Value b = lower(n.kids[1]);
    if (a.is_scalar() && b.is_scalar())
      return scalar_val(cx_mul(a.scalar, b.scalar));
    if (a.is_scalar() || b.is_scalar()) {
      CExpr s = a.is_scalar() ? a.scalar : b.scalar;
      Value m = a.is_scalar() ? std::move(b) : std::move(a);
      for (CExpr& e : m.elems)
        e = a.is_scalar() ? cx_mul(s, e) : cx_mul(e, s);
      return m;
    }
    if (a.cols != b.rows)
      err(ParseErrorKind::DimensionMismatch, n,
          fmt::format("cannot multiply {}x{} by {}x{}", a.rows, a.cols,
                      b.rows, b.cols));
    Value m;
    m.rows = a.rows;
    m.cols = b.cols;
    m.elems.reserve(size_t(m.rows) * m.cols);
    for (uint32_t r = 0; r < m.rows; ++r) {
      for (uint32_t c = 0; c < m.cols; ++c) {
        CExpr acc = cx_mul(a.el(r, 0), b.el(0, c));
        for (uint32_t k = 1; k < a.cols; ++k)
          acc = cx_add(acc, cx_mul(a.el(r, k), b.el(k, c)));
        m.elems.push_back(acc);
      }
    }
    return m;
  }

  Value lower_div(const AstNode& n) {
    Value a = lower(n.kids[0]);
    Value b = lower(n.kids[1]);
    if (!b.is_scalar())
      err(ParseErrorKind::UnsupportedConstruct, n, "division by a matrix");
    if (a.is_scalar()) return scalar_val(cx_div(a.scalar, b.scalar));
    for (CExpr& e : a.elems) e = cx_div(e, b.scalar);
    return a;
  }

  CExpr scalar_pow(CExpr a, CExpr b, const AstNode& n) {
    if (b.is_real()) {
      if (auto k = ex_int_value(b.re)) return cx_pow_int(a, *k);
      if (a.is_real()) return cx_of(ex_pow(a.re, b.re));
    }
    err(ParseErrorKind::UnsupportedConstruct, n,
        "exponentiation of complex values requires an integer exponent");
  }

  Value lower_pow(const AstNode& n) {
    const AstNode& base = file_.node(n.kids[0]);
    Value b = lower(n.kids[1]);
    if (base.kind == AstKind::Var && base.text == "e")
      return scalar_val(cx_exp(as_scalar(b, n, "exponentiation")));
    Value a = lower(n.kids[0]);
    if (a.is_scalar()) {
      if (!b.is_scalar())
        err(ParseErrorKind::UnsupportedConstruct, n, "matrix-valued exponent");
      return scalar_val(scalar_pow(a.scalar, b.scalar, n));
    }
    if (a.rows != a.cols)
      err(ParseErrorKind::DimensionMismatch, n,
          fmt::format("cannot raise a {}x{} matrix to a power", a.rows,
                      a.cols));
    CExpr s = as_scalar(b, n, "exponentiation");
    std::optional<long long> k;
    if (s.is_real()) k = ex_int_value(s.re);
    if (!k)
      err(ParseErrorKind::UnsupportedConstruct, n,
          "matrix power must be a constant integer");
    if (*k < 0)
      err(ParseErrorKind::UnsupportedConstruct, n, "negative matrix power");
    if (*k > 32)
      err(ParseErrorKind::UnsupportedConstruct, n, "matrix power too large");
    Value m;
    m.rows = m.cols = a.rows;
    m.elems.assign(size_t(a.rows) * a.cols, cx_zero());
    for (uint32_t r = 0; r < a.rows; ++r) m.elems[r * a.cols + r] = cx_one();
    for (long long t = 0; t < *k; ++t) {
      Value next;
      next.rows = next.cols = a.rows;
      next.elems.reserve(m.elems.size());
      for (uint32_t r = 0; r < a.rows; ++r) {
        for (uint32_t c = 0; c < a.cols; ++c) {
          CExpr acc = cx_mul(m.el(r, 0), a.el(0, c));
          for (uint32_t j = 1; j < a.cols; ++j)
            acc = cx_add(acc, cx_mul(m.el(r, j), a.el(j, c)));
          next.elems.push_back(acc);
        }
      }
      m = std::move(next);
    }
    return m;
  }
};

}  // namespace

LoweredGate lower_def(const ParsedFile& file, const GateDef& def) {
  return {def.name, Lowerer(file, def).run()};
}

std::vector<LoweredGate> lower_file(const ParsedFile& file) {
  std::vector<LoweredGate> out;
  out.reserve(file.defs.size());
  for (const GateDef& def : file.defs) {
    for (const LoweredGate& g : out)
      if (g.name == def.name)
        throw ParseError(ParseErrorKind::Syntax, def.line, def.col,
                         fmt::format("redefinition of gate '{}'", def.name));
    out.push_back(lower_def(file, def));
  }
  return out;
}

}  // namespace qgl
