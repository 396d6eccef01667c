#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qgl/rational.hpp"

namespace qgl {

enum class Op : uint8_t {
  Var,
  Pi,
  Const,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Sqrt,
  Sin,
  Cos,
  Exp,
  Ln,
};

constexpr size_t kOpCount = 14;

constexpr int op_arity(Op op) {
  switch (op) {
    case Op::Var:
    case Op::Pi:
    case Op::Const:
      return 0;
    case Op::Neg:
    case Op::Sqrt:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Ln:
      return 1;
    default:
      return 2;
  }
}

const char* op_name(Op op);

using ExprId = uint32_t;
using SymId = uint32_t;
constexpr ExprId kNoExpr = UINT32_MAX;

// Immutable, content-hashed expression node. Nodes live in a process-wide
// arena; structural equality is id equality.
struct ExprNode {
  Op op;
  uint32_t a = kNoExpr;
  uint32_t b = kNoExpr;
  uint32_t payload = 0;  // Var: symbol id, Const: number id
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// -- arena access ------------------------------------------------------------

const ExprNode& expr_node(ExprId id);
const std::string& sym_name(SymId s);
SymId sym_intern(std::string_view name);
const Number& const_number(const ExprNode& n);
uint32_t number_intern(const Number& v);
const Number& number_by_id(uint32_t id);
size_t expr_arena_size();

// -- constructors ------------------------------------------------------------

// Reserved names (i, e, and the pi glyph) never become variables.
ExprId ex_var(std::string_view name);
ExprId ex_var(SymId s);
ExprId ex_pi();
ExprId ex_num(const Number& v);
ExprId ex_rat(const Rational& r);
ExprId ex_int(long long v);
ExprId ex_double(double v);
ExprId ex_zero();
ExprId ex_one();

// Folding constructors: perform sound local simplification (exact constant
// arithmetic, neutral elements, trig parity, special angles).
ExprId ex_neg(ExprId a);
ExprId ex_add(ExprId a, ExprId b);
ExprId ex_sub(ExprId a, ExprId b);
ExprId ex_mul(ExprId a, ExprId b);
ExprId ex_div(ExprId a, ExprId b);
ExprId ex_pow(ExprId a, ExprId b);
ExprId ex_sqrt(ExprId a);
ExprId ex_sin(ExprId a);
ExprId ex_cos(ExprId a);
ExprId ex_exp(ExprId a);
ExprId ex_ln(ExprId a);

// Interns the exact node shape with no folding. Used where the chosen
// structure must be preserved (e-graph extraction results).
ExprId ex_raw(Op op, ExprId a = kNoExpr, ExprId b = kNoExpr,
              uint32_t payload = 0);

// -- queries -----------------------------------------------------------------

bool ex_is_zero(ExprId id);
bool ex_is_one(ExprId id);
bool ex_is_exact_rat(ExprId id, const Rational& r);
// Exact integer value of a Const (or Neg of Const) node, if any.
std::optional<long long> ex_int_value(ExprId id);
// Full recursive exact evaluation over the coeff * pi^k domain.
std::optional<PiValue> exact_value(ExprId id);

void free_vars(ExprId id, std::vector<SymId>& order);
bool contains_var(ExprId id, SymId s);
size_t expr_size(ExprId id);

// -- operations --------------------------------------------------------------

using VarMap = std::unordered_map<SymId, double>;
using SubstMap = std::unordered_map<SymId, ExprId>;

double eval_scalar(ExprId id, const VarMap& vars);
ExprId substitute(ExprId id, const SubstMap& map);
ExprId differentiate(ExprId id, SymId var);
std::string expr_str(ExprId id);

}  // namespace qgl
