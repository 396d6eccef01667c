#include "qgl/expr.hpp"

#include <fmt/format.h>

#include <cmath>
#include <deque>
#include <mutex>

namespace qgl {

namespace {

struct NodeKey {
  Op op;
  uint32_t a, b, payload;
  bool operator==(const NodeKey&) const = default;
};

struct NodeKeyHash {
  size_t operator()(const NodeKey& k) const {
    size_t h = static_cast<size_t>(k.op);
    h = h * 1000003u ^ k.a;
    h = h * 1000003u ^ k.b;
    h = h * 1000003u ^ k.payload;
    return h;
  }
};

struct NumberHash {
  size_t operator()(const Number& n) const {
    if (n.exact)
      return std::hash<long long>()(n.rat.num) * 31 ^
             std::hash<long long>()(n.rat.den);
    return std::hash<uint64_t>()(std::bit_cast<uint64_t>(n.approx)) ^ 0x9e37u;
  }
};

struct Arena {
  std::mutex mu;
  std::deque<ExprNode> nodes;
  std::unordered_map<NodeKey, ExprId, NodeKeyHash> hashcons;
  std::deque<std::string> symbols;
  std::unordered_map<std::string, SymId> sym_ids;
  std::deque<Number> numbers;
  std::unordered_map<Number, uint32_t, NumberHash> num_ids;
};

Arena& arena() {
  static Arena* a = new Arena();
  return *a;
}

ExprId intern(Op op, ExprId a, ExprId b, uint32_t payload) {
  Arena& ar = arena();
  std::scoped_lock lock(ar.mu);
  NodeKey key{op, a, b, payload};
  auto it = ar.hashcons.find(key);
  if (it != ar.hashcons.end()) return it->second;
  ExprId id = static_cast<ExprId>(ar.nodes.size());
  ar.nodes.push_back(ExprNode{op, a, b, payload});
  ar.hashcons.emplace(key, id);
  return id;
}

uint32_t intern_number(const Number& v) {
  Arena& ar = arena();
  std::scoped_lock lock(ar.mu);
  auto it = ar.num_ids.find(v);
  if (it != ar.num_ids.end()) return it->second;
  uint32_t id = static_cast<uint32_t>(ar.numbers.size());
  ar.numbers.push_back(v);
  ar.num_ids.emplace(v, id);
  return id;
}

std::optional<Number> const_of(ExprId id) {
  const ExprNode& n = expr_node(id);
  if (n.op != Op::Const) return std::nullopt;
  return const_number(n);
}

bool both_exact(const Number& x, const Number& y) {
  return x.exact && y.exact;
}

ExprId fold_or_double(std::optional<Rational> exact, double approx) {
  if (exact) return ex_rat(*exact);
  return ex_double(approx);
}

// sin/cos at quarter-pi multiples; r is the coefficient of pi, reduced mod 2.
std::optional<ExprId> trig_special(const Rational& r, bool is_sin) {
  auto quarters = rat_mul(r, Rational{4, 1});
  if (!quarters || !quarters->is_integer()) return std::nullopt;
  long long q = ((quarters->num % 8) + 8) % 8;
  ExprId inv_sqrt2 = ex_div(ex_one(), ex_sqrt(ex_int(2)));
  auto pick = [&](int table_entry) -> ExprId {
    switch (table_entry) {
      case 0: return ex_zero();
      case 1: return ex_one();
      case -1: return ex_neg(ex_one());
      case 2: return inv_sqrt2;
      default: return ex_neg(inv_sqrt2);
    }
  };
  // entries: 0, 1, -1, 2 (=1/sqrt2), -2 (=-1/sqrt2)
  static const int sin_tab[8] = {0, 2, 1, 2, 0, -2, -1, -2};
  static const int cos_tab[8] = {1, 2, 0, -2, -1, -2, 0, 2};
  return pick(is_sin ? sin_tab[q] : cos_tab[q]);
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Var: return "var";
    case Op::Pi: return "pi";
    case Op::Const: return "const";
    case Op::Neg: return "~";
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Pow: return "^";
    case Op::Sqrt: return "sqrt";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Ln: return "ln";
  }
  return "?";
}

const ExprNode& expr_node(ExprId id) { return arena().nodes[id]; }

const std::string& sym_name(SymId s) { return arena().symbols[s]; }

SymId sym_intern(std::string_view name) {
  Arena& ar = arena();
  std::scoped_lock lock(ar.mu);
  auto it = ar.sym_ids.find(std::string(name));
  if (it != ar.sym_ids.end()) return it->second;
  SymId id = static_cast<SymId>(ar.symbols.size());
  ar.symbols.emplace_back(name);
  ar.sym_ids.emplace(std::string(name), id);
  return id;
}

const Number& const_number(const ExprNode& n) {
  return arena().numbers[n.payload];
}

uint32_t number_intern(const Number& v) { return intern_number(v); }

const Number& number_by_id(uint32_t id) { return arena().numbers[id]; }

size_t expr_arena_size() { return arena().nodes.size(); }

ExprId ex_var(std::string_view name) {
  if (name == "i" || name == "e" || name == "π")
    throw std::invalid_argument("reserved name used as variable: " +
                                std::string(name));
  return intern(Op::Var, kNoExpr, kNoExpr, sym_intern(name));
}

ExprId ex_var(SymId s) { return intern(Op::Var, kNoExpr, kNoExpr, s); }

ExprId ex_pi() { return intern(Op::Pi, kNoExpr, kNoExpr, 0); }

ExprId ex_num(const Number& v) {
  return intern(Op::Const, kNoExpr, kNoExpr, intern_number(v));
}

ExprId ex_rat(const Rational& r) { return ex_num(Number::of_rat(r)); }

ExprId ex_int(long long v) { return ex_rat(Rational{v, 1}); }

ExprId ex_double(double v) { return ex_num(Number::of_double(v)); }

ExprId ex_zero() { return ex_int(0); }

ExprId ex_one() { return ex_int(1); }

ExprId ex_raw(Op op, ExprId a, ExprId b, uint32_t payload) {
  return intern(op, a, b, payload);
}

bool ex_is_zero(ExprId id) {
  auto c = const_of(id);
  return c && c->exact && c->rat.is_zero();
}

bool ex_is_one(ExprId id) {
  auto c = const_of(id);
  return c && c->exact && c->rat.is_one();
}

bool ex_is_exact_rat(ExprId id, const Rational& r) {
  auto c = const_of(id);
  return c && c->exact && c->rat == r;
}

std::optional<long long> ex_int_value(ExprId id) {
  const ExprNode& n = expr_node(id);
  if (n.op == Op::Neg) {
    auto inner = ex_int_value(n.a);
    if (inner) return -*inner;
    return std::nullopt;
  }
  auto c = const_of(id);
  if (c && c->exact && c->rat.is_integer()) return c->rat.num;
  return std::nullopt;
}

std::optional<PiValue> exact_value(ExprId id) {
  const ExprNode& n = expr_node(id);
  switch (n.op) {
    case Op::Var: return std::nullopt;
    case Op::Pi: return PiValue{{1, 1}, 1};
    case Op::Const: {
      const Number& v = const_number(n);
      if (!v.exact) return std::nullopt;
      return PiValue{v.rat, 0};
    }
    case Op::Neg: {
      auto a = exact_value(n.a);
      if (!a) return std::nullopt;
      return pival_neg(*a);
    }
    default: break;
  }
  auto a = exact_value(n.a);
  if (!a) return std::nullopt;
  if (op_arity(n.op) == 1) {
    if (n.op == Op::Sqrt && a->pi_pow == 0) {
      auto r = rat_sqrt(a->coeff);
      if (r) return PiValue{*r, 0};
    }
    if (n.op == Op::Exp && a->is_zero()) return PiValue{{1, 1}, 0};
    if (n.op == Op::Ln && a->is_rational() && a->coeff.is_one())
      return PiValue{{0, 1}, 0};
    return std::nullopt;
  }
  auto b = exact_value(n.b);
  if (!b) return std::nullopt;
  switch (n.op) {
    case Op::Add: return pival_add(*a, *b);
    case Op::Sub: return pival_sub(*a, *b);
    case Op::Mul: return pival_mul(*a, *b);
    case Op::Div: return pival_div(*a, *b);
    case Op::Pow:
      if (b->is_rational() && b->coeff.is_integer())
        return pival_pow(*a, b->coeff.num);
      return std::nullopt;
    default: return std::nullopt;
  }
}

ExprId ex_neg(ExprId a) {
  auto c = const_of(a);
  if (c) {
    if (c->exact) return ex_rat(rat_neg(c->rat));
    return ex_double(-c->approx);
  }
  const ExprNode& n = expr_node(a);
  if (n.op == Op::Neg) return n.a;
  return intern(Op::Neg, a, kNoExpr, 0);
}

ExprId ex_add(ExprId a, ExprId b) {
  auto ca = const_of(a), cb = const_of(b);
  if (ca && cb) {
    if (both_exact(*ca, *cb))
      return fold_or_double(rat_add(ca->rat, cb->rat),
                            ca->to_double() + cb->to_double());
    return ex_double(ca->to_double() + cb->to_double());
  }
  if (ex_is_zero(a)) return b;
  if (ex_is_zero(b)) return a;
  return intern(Op::Add, a, b, 0);
}

ExprId ex_sub(ExprId a, ExprId b) {
  auto ca = const_of(a), cb = const_of(b);
  if (ca && cb) {
    if (both_exact(*ca, *cb))
      return fold_or_double(rat_sub(ca->rat, cb->rat),
                            ca->to_double() - cb->to_double());
    return ex_double(ca->to_double() - cb->to_double());
  }
  if (ex_is_zero(b)) return a;
  if (ex_is_zero(a)) return ex_neg(b);
  if (a == b) return ex_zero();
  return intern(Op::Sub, a, b, 0);
}

ExprId ex_mul(ExprId a, ExprId b) {
  auto ca = const_of(a), cb = const_of(b);
  if (ca && cb) {
    if (both_exact(*ca, *cb))
      return fold_or_double(rat_mul(ca->rat, cb->rat),
                            ca->to_double() * cb->to_double());
    return ex_double(ca->to_double() * cb->to_double());
  }
  if (ex_is_zero(a) || ex_is_zero(b)) return ex_zero();
  if (ex_is_one(a)) return b;
  if (ex_is_one(b)) return a;
  if (ex_is_exact_rat(a, Rational::of(-1))) return ex_neg(b);
  if (ex_is_exact_rat(b, Rational::of(-1))) return ex_neg(a);
  return intern(Op::Mul, a, b, 0);
}

// Conservative non-vanishing test for divisor folds: covers the structural
// forms the arena can prove without evaluation.
static bool known_nonzero(ExprId id) {
  const ExprNode& n = arena().nodes[id];
  switch (n.op) {
    case Op::Pi: return true;
    case Op::Const: {
      const Number& v = const_number(n);
      return v.to_double() != 0.0;
    }
    case Op::Neg: return known_nonzero(n.a);
    case Op::Exp: return true;
    case Op::Sqrt: {
      const ExprNode& arg = arena().nodes[n.a];
      if (arg.op == Op::Pi) return true;
      if (arg.op != Op::Const) return false;
      return const_number(arg).to_double() > 0.0;
    }
    default: return false;
  }
}

ExprId ex_div(ExprId a, ExprId b) {
  auto ca = const_of(a), cb = const_of(b);
  if (cb && cb->to_double() == 0.0) {
    // keep the node; evaluation reports the domain error
    return intern(Op::Div, a, b, 0);
  }
  if (ca && cb) {
    if (both_exact(*ca, *cb))
      return fold_or_double(rat_div(ca->rat, cb->rat),
                            ca->to_double() / cb->to_double());
    return ex_double(ca->to_double() / cb->to_double());
  }
  if (ex_is_one(b)) return a;
  if (ex_is_zero(a) && known_nonzero(b)) return ex_zero();
  return intern(Op::Div, a, b, 0);
}

ExprId ex_pow(ExprId a, ExprId b) {
  auto cb = const_of(b);
  if (cb && cb->exact && cb->rat.is_integer()) {
    long long k = cb->rat.num;
    if (k == 0) return ex_one();
    if (k == 1) return a;
    auto ca = const_of(a);
    if (ca && ca->exact) {
      auto r = rat_pow(ca->rat, k);
      if (r) return ex_rat(*r);
    }
  }
  return intern(Op::Pow, a, b, 0);
}

ExprId ex_sqrt(ExprId a) {
  auto ca = const_of(a);
  if (ca && ca->exact && !ca->rat.negative()) {
    auto r = rat_sqrt(ca->rat);
    if (r) return ex_rat(*r);
  }
  return intern(Op::Sqrt, a, kNoExpr, 0);
}

namespace {
ExprId trig(Op op, ExprId a) {
  bool is_sin = op == Op::Sin;
  auto v = exact_value(a);
  if (v) {
    if (v->is_zero()) return is_sin ? ex_zero() : ex_one();
    if (v->pi_pow == 1) {
      auto s = trig_special(v->coeff, is_sin);
      if (s) return *s;
    }
  }
  const ExprNode& n = expr_node(a);
  if (n.op == Op::Neg) {
    // parity normalization: sin(-x) = -sin(x), cos(-x) = cos(x)
    if (is_sin) return ex_neg(intern(Op::Sin, n.a, kNoExpr, 0));
    return intern(Op::Cos, n.a, kNoExpr, 0);
  }
  return intern(op, a, kNoExpr, 0);
}
}  // namespace

ExprId ex_sin(ExprId a) { return trig(Op::Sin, a); }

ExprId ex_cos(ExprId a) { return trig(Op::Cos, a); }

ExprId ex_exp(ExprId a) {
  if (ex_is_zero(a)) return ex_one();
  return intern(Op::Exp, a, kNoExpr, 0);
}

ExprId ex_ln(ExprId a) {
  if (ex_is_one(a)) return ex_zero();
  return intern(Op::Ln, a, kNoExpr, 0);
}

void free_vars(ExprId id, std::vector<SymId>& order) {
  const ExprNode& n = expr_node(id);
  if (n.op == Op::Var) {
    for (SymId s : order)
      if (s == n.payload) return;
    order.push_back(n.payload);
    return;
  }
  int ar = op_arity(n.op);
  if (ar >= 1) free_vars(n.a, order);
  if (ar >= 2) free_vars(n.b, order);
}

bool contains_var(ExprId id, SymId s) {
  const ExprNode& n = expr_node(id);
  if (n.op == Op::Var) return n.payload == s;
  int ar = op_arity(n.op);
  if (ar >= 1 && contains_var(n.a, s)) return true;
  return ar >= 2 && contains_var(n.b, s);
}

size_t expr_size(ExprId id) {
  const ExprNode& n = expr_node(id);
  int ar = op_arity(n.op);
  size_t s = 1;
  if (ar >= 1) s += expr_size(n.a);
  if (ar >= 2) s += expr_size(n.b);
  return s;
}

double eval_scalar(ExprId id, const VarMap& vars) {
  const ExprNode& n = expr_node(id);
  switch (n.op) {
    case Op::Var: {
      auto it = vars.find(n.payload);
      if (it == vars.end())
        throw EvalError("unbound variable " + sym_name(n.payload));
      return it->second;
    }
    case Op::Pi: return M_PI;
    case Op::Const: return const_number(n).to_double();
    case Op::Neg: return -eval_scalar(n.a, vars);
    case Op::Add: return eval_scalar(n.a, vars) + eval_scalar(n.b, vars);
    case Op::Sub: return eval_scalar(n.a, vars) - eval_scalar(n.b, vars);
    case Op::Mul: return eval_scalar(n.a, vars) * eval_scalar(n.b, vars);
    case Op::Div: {
      double d = eval_scalar(n.b, vars);
      if (d == 0.0) throw EvalError("division by zero");
      return eval_scalar(n.a, vars) / d;
    }
    case Op::Pow: {
      double base = eval_scalar(n.a, vars);
      double expo = eval_scalar(n.b, vars);
      if (base < 0 && expo != std::floor(expo))
        throw EvalError("negative base with non-integer exponent");
      if (base == 0 && expo < 0) throw EvalError("zero base, negative power");
      return std::pow(base, expo);
    }
    case Op::Sqrt: {
      double v = eval_scalar(n.a, vars);
      if (v < 0) throw EvalError("square root of negative value");
      return std::sqrt(v);
    }
    case Op::Sin: return std::sin(eval_scalar(n.a, vars));
    case Op::Cos: return std::cos(eval_scalar(n.a, vars));
    case Op::Exp: return std::exp(eval_scalar(n.a, vars));
    case Op::Ln: {
      double v = eval_scalar(n.a, vars);
      if (v <= 0) throw EvalError("logarithm of non-positive value");
      return std::log(v);
    }
  }
  throw EvalError("bad expression node");
}

namespace {

ExprId rebuild(Op op, ExprId a, ExprId b, const ExprNode& n) {
  switch (op) {
    case Op::Neg: return ex_neg(a);
    case Op::Add: return ex_add(a, b);
    case Op::Sub: return ex_sub(a, b);
    case Op::Mul: return ex_mul(a, b);
    case Op::Div: return ex_div(a, b);
    case Op::Pow: return ex_pow(a, b);
    case Op::Sqrt: return ex_sqrt(a);
    case Op::Sin: return ex_sin(a);
    case Op::Cos: return ex_cos(a);
    case Op::Exp: return ex_exp(a);
    case Op::Ln: return ex_ln(a);
    default: return intern(op, n.a, n.b, n.payload);
  }
}

ExprId subst_rec(ExprId id, const SubstMap& map,
                 std::unordered_map<ExprId, ExprId>& memo) {
  auto it = memo.find(id);
  if (it != memo.end()) return it->second;
  const ExprNode& n = expr_node(id);
  ExprId out;
  if (n.op == Op::Var) {
    auto m = map.find(n.payload);
    out = m != map.end() ? m->second : id;
  } else if (op_arity(n.op) == 0) {
    out = id;
  } else {
    ExprId a = subst_rec(n.a, map, memo);
    ExprId b = op_arity(n.op) == 2 ? subst_rec(n.b, map, memo) : kNoExpr;
    out = (a == n.a && b == n.b) ? id : rebuild(n.op, a, b, n);
  }
  memo.emplace(id, out);
  return out;
}

ExprId diff_rec(ExprId id, SymId var,
                std::unordered_map<ExprId, ExprId>& memo) {
  auto it = memo.find(id);
  if (it != memo.end()) return it->second;
  const ExprNode& n = expr_node(id);
  ExprId out;
  auto d = [&](ExprId x) { return diff_rec(x, var, memo); };
  switch (n.op) {
    case Op::Var: out = n.payload == var ? ex_one() : ex_zero(); break;
    case Op::Pi:
    case Op::Const: out = ex_zero(); break;
    case Op::Neg: out = ex_neg(d(n.a)); break;
    case Op::Add: out = ex_add(d(n.a), d(n.b)); break;
    case Op::Sub: out = ex_sub(d(n.a), d(n.b)); break;
    case Op::Mul:
      out = ex_add(ex_mul(d(n.a), n.b), ex_mul(n.a, d(n.b)));
      break;
    case Op::Div:
      out = ex_div(ex_sub(ex_mul(d(n.a), n.b), ex_mul(n.a, d(n.b))),
                   ex_mul(n.b, n.b));
      break;
    case Op::Pow: {
      if (!contains_var(n.b, var)) {
        // d a^k = k * a^(k-1) * da
        out = ex_mul(ex_mul(n.b, ex_pow(n.a, ex_sub(n.b, ex_one()))), d(n.a));
      } else {
        // a^b = exp(b ln a)
        out = ex_mul(id, ex_add(ex_mul(d(n.b), ex_ln(n.a)),
                                ex_div(ex_mul(n.b, d(n.a)), n.a)));
      }
      break;
    }
    case Op::Sqrt:
      out = ex_div(d(n.a), ex_mul(ex_int(2), ex_sqrt(n.a)));
      break;
    case Op::Sin: out = ex_mul(ex_cos(n.a), d(n.a)); break;
    case Op::Cos: out = ex_neg(ex_mul(ex_sin(n.a), d(n.a))); break;
    case Op::Exp: out = ex_mul(id, d(n.a)); break;
    case Op::Ln: out = ex_div(d(n.a), n.a); break;
    default: throw EvalError("bad expression node");
  }
  memo.emplace(id, out);
  return out;
}

}  // namespace

ExprId substitute(ExprId id, const SubstMap& map) {
  std::unordered_map<ExprId, ExprId> memo;
  return subst_rec(id, map, memo);
}

ExprId differentiate(ExprId id, SymId var) {
  std::unordered_map<ExprId, ExprId> memo;
  return diff_rec(id, var, memo);
}

namespace {

// precedence: add/sub 1, mul/div 2, neg 3, pow 4, atom 5
int prec(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

// Grammar note: '~' may only lead a term, so a Neg under the right side of
// '*' or '/', or anywhere under '^', must be parenthesized.
void print_rec(ExprId id, std::string& out, int parent_prec) {
  const ExprNode& n = expr_node(id);
  int p = prec(n.op);
  switch (n.op) {
    case Op::Var: out += sym_name(n.payload); return;
    case Op::Pi: out += "π"; return;
    case Op::Const: {
      const Number& v = const_number(n);
      bool negative = v.exact ? v.rat.negative() : v.approx < 0;
      // A fraction prints as a quotient, so it binds like one.
      bool fraction = v.exact && v.rat.den != 1;
      bool wrap = (negative || fraction) && parent_prec > 2;
      if (wrap) out += "(";
      if (v.exact) {
        if (negative) out += "~";
        out += rat_str(negative ? rat_neg(v.rat) : v.rat);
      } else {
        if (negative)
          out += fmt::format("~{}", -v.approx);
        else
          out += fmt::format("{}", v.approx);
      }
      if (wrap) out += ")";
      return;
    }
    case Op::Sqrt:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Ln:
      out += op_name(n.op);
      out += "(";
      print_rec(n.a, out, 0);
      out += ")";
      return;
    case Op::Neg: {
      bool wrap = p < parent_prec;
      if (wrap) out += "(";
      out += "~";
      print_rec(n.a, out, p + 1);
      if (wrap) out += ")";
      return;
    }
    default: break;
  }
  bool wrap = p < parent_prec;
  if (wrap) out += "(";
  if (n.op == Op::Pow) {
    print_rec(n.a, out, p + 1);
    out += "^";
    print_rec(n.b, out, p);  // right-associative
  } else {
    print_rec(n.a, out, p);
    out += fmt::format(" {} ", op_name(n.op));
    // right side of '*' or '/' is a factor: no leading '~' allowed there
    int rp = (n.op == Op::Mul || n.op == Op::Div) ? 4 : p + 1;
    print_rec(n.b, out, rp);
  }
  if (wrap) out += ")";
}

}  // namespace

std::string expr_str(ExprId id) {
  std::string out;
  print_rec(id, out, 0);
  return out;
}

}  // namespace qgl
