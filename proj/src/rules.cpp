#include "qgl/rules.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace qgl {

namespace {

[[noreturn]] void bad(const std::string& rule, const std::string& msg) {
  throw std::runtime_error(fmt::format("rule '{}': {}", rule, msg));
}

// Minimal pattern-expression parser: QGL operator grammar plus `?x` pattern
// variables; identifiers may be multi-byte (π).
class PatParser {
 public:
  PatParser(const std::string& text, const std::string& rule,
            std::map<std::string, uint32_t>& vars, bool allow_new_vars)
      : s_(text), rule_(rule), vars_(vars), allow_new_(allow_new_vars) {}

  Pattern run() {
    Pattern p;
    pat_ = &p;
    p.root = expr();
    skip();
    if (i_ != s_.size()) bad(rule_, "trailing characters in pattern");
    return p;
  }

 private:
  const std::string& s_;
  const std::string& rule_;
  std::map<std::string, uint32_t>& vars_;
  bool allow_new_;
  size_t i_ = 0;
  Pattern* pat_ = nullptr;

  void skip() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }
  bool eat(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  bool peek(char c) {
    skip();
    return i_ < s_.size() && s_[i_] == c;
  }

  uint32_t mk(PatNode n) {
    pat_->nodes.push_back(n);
    return static_cast<uint32_t>(pat_->nodes.size() - 1);
  }
  uint32_t mk_op(Op op, uint32_t k0 = 0, uint32_t k1 = 0) {
    PatNode n;
    n.kind = PatNode::Node;
    n.op = op;
    n.k0 = k0;
    n.k1 = k1;
    return mk(n);
  }

  uint32_t expr() {
    uint32_t lhs = term();
    for (;;) {
      if (eat('+')) lhs = mk_op(Op::Add, lhs, term());
      else if (eat('-')) lhs = mk_op(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  uint32_t term() {
    int negs = 0;
    while (eat('~')) ++negs;
    uint32_t lhs = factor();
    while (negs--) lhs = mk_op(Op::Neg, lhs);
    for (;;) {
      if (eat('*')) lhs = mk_op(Op::Mul, lhs, factor());
      else if (eat('/')) lhs = mk_op(Op::Div, lhs, factor());
      else return lhs;
    }
  }

  uint32_t factor() {
    uint32_t base = primary();
    if (eat('^')) return mk_op(Op::Pow, base, factor());
    return base;
  }

  static bool ident_ch(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '_' || c >= 0x80;
  }

  std::string ident() {
    std::string out;
    while (i_ < s_.size() && ident_ch(static_cast<unsigned char>(s_[i_])))
      out += s_[i_++];
    if (out.empty()) bad(rule_, "expected identifier");
    return out;
  }

  uint32_t primary() {
    skip();
    if (i_ >= s_.size()) bad(rule_, "unexpected end of pattern");
    char c = s_[i_];
    if (c == '(') {
      ++i_;
      uint32_t e = expr();
      if (!eat(')')) bad(rule_, "expected ')'");
      return e;
    }
    if (c == '?') {
      ++i_;
      std::string name = ident();
      auto it = vars_.find(name);
      if (it == vars_.end()) {
        if (!allow_new_)
          bad(rule_, fmt::format("?{} not bound on the left-hand side", name));
        if (vars_.size() >= kMaxRuleVars) bad(rule_, "too many pattern variables");
        it = vars_.emplace(name, static_cast<uint32_t>(vars_.size())).first;
      }
      PatNode n;
      n.kind = PatNode::PVar;
      n.var = it->second;
      return mk(n);
    }
    if (c >= '0' && c <= '9') return number();
    std::string name = ident();
    if (name == "π") return mk_op(Op::Pi);
    if (peek('(')) {
      Op op;
      if (name == "sqrt") op = Op::Sqrt;
      else if (name == "sin") op = Op::Sin;
      else if (name == "cos") op = Op::Cos;
      else if (name == "exp") op = Op::Exp;
      else if (name == "ln") op = Op::Ln;
      else if (name == "pow") op = Op::Pow;
      else bad(rule_, fmt::format("unknown function '{}'", name));
      eat('(');
      uint32_t a = expr();
      uint32_t b = 0;
      if (op == Op::Pow) {
        if (!eat(',')) bad(rule_, "pow needs two arguments");
        b = expr();
      }
      if (!eat(')')) bad(rule_, "expected ')'");
      return mk_op(op, a, b);
    }
    bad(rule_, fmt::format("unknown identifier '{}' (pattern variables use ?{})",
                           name, name));
  }

  uint32_t number() {
    size_t start = i_;
    while (i_ < s_.size() && s_[i_] >= '0' && s_[i_] <= '9') ++i_;
    long long whole = std::stoll(s_.substr(start, i_ - start));
    Rational r = Rational::of(whole);
    if (i_ < s_.size() && s_[i_] == '.') {
      ++i_;
      size_t fs = i_;
      while (i_ < s_.size() && s_[i_] >= '0' && s_[i_] <= '9') ++i_;
      if (fs == i_) bad(rule_, "malformed number");
      std::string frac = s_.substr(fs, i_ - fs);
      long long den = 1;
      for (size_t k = 0; k < frac.size(); ++k) den *= 10;
      r = Rational::of(whole * den + std::stoll(frac), den);
    }
    PatNode n;
    n.kind = PatNode::Node;
    n.op = Op::Const;
    n.payload = number_intern(Number::of_rat(r));
    return mk(n);
  }
};

// Folds fully-constant subtrees of a left-hand side into exact values so
// they match by analysis value rather than by structure.
std::optional<PiValue> collapse(Pattern& p, uint32_t idx) {
  PatNode& n = p.nodes[idx];
  if (n.kind == PatNode::PVar) return std::nullopt;
  if (n.kind == PatNode::Value) return n.value;
  std::optional<PiValue> v;
  int ar = op_arity(n.op);
  if (ar == 0) {
    if (n.op == Op::Pi) v = PiValue::of(Rational::of(1), 1);
    else if (n.op == Op::Const) {
      const Number& num = number_by_id(n.payload);
      if (num.exact) v = PiValue::of(num.rat, 0);
    }
  } else {
    auto x = collapse(p, n.k0);
    if (x) {
      if (ar == 1) {
        v = pival_apply(n.op, *x, nullptr);
      } else {
        auto y = collapse(p, n.k1);
        if (y) v = pival_apply(n.op, *x, &*y);
      }
    } else if (ar == 2) {
      collapse(p, n.k1);
    }
  }
  if (v) {
    n.kind = PatNode::Value;
    n.value = *v;
  }
  return v;
}

void check_rhs_vars(const Pattern& p, uint32_t idx, const std::string& rule,
                    uint32_t nvars) {
  const PatNode& n = p.nodes[idx];
  if (n.kind == PatNode::PVar) {
    if (n.var >= nvars) bad(rule, "right-hand side variable not on the left");
    return;
  }
  if (n.kind != PatNode::Node) return;
  if (op_arity(n.op) >= 1) check_rhs_vars(p, n.k0, rule, nvars);
  if (op_arity(n.op) == 2) check_rhs_vars(p, n.k1, rule, nvars);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

RuleSet parse_rules(const std::string& source) {
  RuleSet out;
  std::istringstream in(source);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error(fmt::format("rule line without name: {}", line));
    Rule r;
    r.name = trim(line.substr(0, colon));
    std::string rest = line.substr(colon + 1);
    size_t arrow = rest.find("=>");
    if (arrow == std::string::npos) bad(r.name, "missing '=>'");
    std::string lhs_text = trim(rest.substr(0, arrow));
    std::string rhs_text = trim(rest.substr(arrow + 2));

    // optional trailing guard: `if pred(?x)`
    std::string guard_arg;
    size_t ifpos = rhs_text.rfind(" if ");
    if (ifpos != std::string::npos) {
      std::string g = trim(rhs_text.substr(ifpos + 4));
      rhs_text = trim(rhs_text.substr(0, ifpos));
      size_t open = g.find('(');
      if (open == std::string::npos || g.back() != ')')
        bad(r.name, "malformed guard");
      std::string pred = trim(g.substr(0, open));
      std::string arg = trim(g.substr(open + 1, g.size() - open - 2));
      if (pred == "nonzero") r.guard = GuardKind::NonZero;
      else if (pred == "nonneg") r.guard = GuardKind::NonNeg;
      else if (pred == "pos") r.guard = GuardKind::Pos;
      else if (pred == "const") r.guard = GuardKind::IsConst;
      else bad(r.name, fmt::format("unknown guard '{}'", pred));
      if (arg.empty() || arg[0] != '?') bad(r.name, "guard needs a ?variable");
      guard_arg = arg.substr(1);
    }

    std::map<std::string, uint32_t> vars;
    r.lhs = PatParser(lhs_text, r.name, vars, true).run();
    r.rhs = PatParser(rhs_text, r.name, vars, false).run();
    r.nvars = static_cast<uint32_t>(vars.size());
    collapse(r.lhs, r.lhs.root);
    if (r.lhs.nodes[r.lhs.root].kind != PatNode::Node)
      bad(r.name, "left-hand side must have an operator at the root");
    check_rhs_vars(r.rhs, r.rhs.root, r.name, r.nvars);
    if (r.guard != GuardKind::None) {
      auto it = vars.find(guard_arg);
      if (it == vars.end()) bad(r.name, "guard variable not in pattern");
      r.guard_var = it->second;
    }
    out.push_back(std::move(r));
  }
  return out;
}

RuleSet load_rules_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_rules(buf.str());
}

std::string default_rules_path() { return QUDIT_DATA_DIR "/rules.txt"; }

const RuleSet& default_rules() {
  static const RuleSet rules = load_rules_file(default_rules_path());
  return rules;
}

}  // namespace qgl
