#include "qgl/egraph.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>

#include "qgl/rules.hpp"

namespace qgl {

CostTable CostTable::defaults() {
  CostTable t;
  auto set = [&](Op op, double c) { t.cost[static_cast<size_t>(op)] = c; };
  set(Op::Var, 0.0);
  set(Op::Pi, 0.0);
  set(Op::Const, 0.5);
  set(Op::Neg, 1.0);
  set(Op::Add, 1.0);
  set(Op::Sub, 1.0);
  set(Op::Mul, 5.0);
  set(Op::Div, 5.0);
  set(Op::Sqrt, 50.0);
  set(Op::Sin, 50.0);
  set(Op::Cos, 50.0);
  set(Op::Exp, 100.0);
  set(Op::Ln, 100.0);
  set(Op::Pow, 100.0);
  return t;
}

double cost_of(ExprId e, const CostTable& table) {
  std::unordered_map<ExprId, double> memo;
  auto rec = [&](auto&& self, ExprId id) -> double {
    auto it = memo.find(id);
    if (it != memo.end()) return it->second;
    const ExprNode& n = expr_node(id);
    double c = table.of(n.op);
    if (op_arity(n.op) >= 1) c += self(self, n.a);
    if (op_arity(n.op) == 2) c += self(self, n.b);
    memo.emplace(id, c);
    return c;
  };
  return rec(rec, e);
}

const char* sat_stop_name(SatStop s) {
  switch (s) {
    case SatStop::Saturated: return "saturated";
    case SatStop::IterLimit: return "iteration-limit";
    case SatStop::NodeLimit: return "node-limit";
    case SatStop::TimeLimit: return "time-limit";
    case SatStop::Goal: return "goal";
  }
  return "?";
}

ClassId EGraph::find(ClassId c) const {
  while (uf_[c] != c) {
    uf_[c] = uf_[uf_[c]];
    c = uf_[c];
  }
  return c;
}

ENode EGraph::canon(ENode n) const {
  if (op_arity(n.op) >= 1) n.a = find(n.a);
  if (op_arity(n.op) == 2) n.b = find(n.b);
  return n;
}

const std::optional<PiValue>& EGraph::value_of(ClassId c) const {
  return classes_[find(c)].value;
}

size_t EGraph::class_count() const {
  size_t n = 0;
  for (ClassId c = 0; c < classes_.size(); ++c)
    if (find(c) == c && classes_[c].live) ++n;
  return n;
}

const std::vector<ENode>& EGraph::nodes_of(ClassId c) const {
  return classes_[find(c)].nodes;
}

std::optional<PiValue> pival_apply(Op op, const PiValue& a, const PiValue* b) {
  switch (op) {
    case Op::Neg:
      return pival_neg(a);
    case Op::Add:
      return b ? pival_add(a, *b) : std::nullopt;
    case Op::Sub:
      return b ? pival_sub(a, *b) : std::nullopt;
    case Op::Mul:
      return b ? pival_mul(a, *b) : std::nullopt;
    case Op::Div:
      if (b && !b->is_zero()) return pival_div(a, *b);
      return std::nullopt;
    case Op::Pow:
      if (b && b->is_rational() && b->coeff.is_integer())
        return pival_pow(a, b->coeff.num);
      return std::nullopt;
    case Op::Sqrt:
      if (a.is_rational() && !a.coeff.negative())
        if (auto r = rat_sqrt(a.coeff)) return PiValue::of(*r);
      return std::nullopt;
    case Op::Sin:
    case Op::Cos: {
      if (a.is_zero()) return PiValue::of(Rational::of(op == Op::Cos ? 1 : 0));
      if (a.pi_pow != 1) return std::nullopt;
      // multiples of π/2 have exact values 0, ±1
      auto m = rat_mul(a.coeff, Rational::of(2));
      if (!m || !m->is_integer()) return std::nullopt;
      long long q = ((m->num % 4) + 4) % 4;
      static const int sin_q[4] = {0, 1, 0, -1};
      static const int cos_q[4] = {1, 0, -1, 0};
      return PiValue::of(Rational::of(op == Op::Sin ? sin_q[q] : cos_q[q]));
    }
    case Op::Exp:
      if (a.is_zero()) return PiValue::of(Rational::of(1));
      return std::nullopt;
    case Op::Ln:
      if (a.is_rational() && a.coeff.is_one())
        return PiValue::of(Rational::of(0));
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

std::optional<PiValue> EGraph::make_value(const ENode& n) const {
  auto cv = [&](ClassId c) { return classes_[find(c)].value; };
  switch (n.op) {
    case Op::Pi:
      return PiValue::of(Rational::of(1), 1);
    case Op::Const: {
      const Number& num = number_by_id(n.payload);
      if (num.exact) return PiValue::of(num.rat, 0);
      return std::nullopt;
    }
    case Op::Var:
      return std::nullopt;
    case Op::Mul: {
      auto x = cv(n.a), y = cv(n.b);
      if ((x && x->is_zero()) || (y && y->is_zero()))
        return PiValue::of(Rational::of(0));
      if (x && y) return pival_apply(Op::Mul, *x, &*y);
      return std::nullopt;
    }
    default: {
      auto x = cv(n.a);
      if (!x) return std::nullopt;
      if (op_arity(n.op) == 1) return pival_apply(n.op, *x, nullptr);
      auto y = cv(n.b);
      if (!y) return std::nullopt;
      return pival_apply(n.op, *x, &*y);
    }
  }
}

ClassId EGraph::add_expr(ExprId e) {
  auto it = expr_cache_.find(e);
  if (it != expr_cache_.end()) return find(it->second);
  const ExprNode& n = expr_node(e);
  ENode en{n.op, kNoClass, kNoClass, 0};
  if (n.op == Op::Var || n.op == Op::Const) en.payload = n.payload;
  if (op_arity(n.op) >= 1) en.a = add_expr(n.a);
  if (op_arity(n.op) == 2) en.b = add_expr(n.b);
  ClassId c = add_node(en);
  expr_cache_.emplace(e, c);
  return c;
}

ClassId EGraph::add_node(ENode n) {
  n = canon(n);
  auto it = memo_.find(n);
  if (it != memo_.end()) return find(it->second);
  ClassId c = static_cast<ClassId>(classes_.size());
  uf_.push_back(c);
  classes_.emplace_back();
  classes_[c].nodes.push_back(n);
  ++n_nodes_;
  memo_.emplace(n, c);
  if (op_arity(n.op) >= 1) classes_[n.a].parents.push_back({n, c});
  if (op_arity(n.op) == 2 && find(n.b) != find(n.a))
    classes_[n.b].parents.push_back({n, c});
  if (auto v = make_value(n)) set_value(c, *v);
  return find(c);
}

void EGraph::set_value(ClassId c, const PiValue& v) {
  c = find(c);
  if (classes_[c].value) {
    if (!(*classes_[c].value == v))
      throw std::runtime_error(
          "equality saturation merged two distinct constants (unsound rule)");
    return;
  }
  classes_[c].value = v;
  dirty_.push_back(c);
  auto [it, fresh] = value_index_.emplace(v, c);
  if (!fresh) merge(c, it->second);
  // materialize a canonical leaf when one exists, so extraction can pick it
  if (v.is_rational()) {
    ClassId cc = add_node(
        ENode{Op::Const, kNoClass, kNoClass, number_intern(Number::of_rat(v.coeff))});
    merge(c, cc);
  } else if (v.pi_pow == 1 && v.coeff.is_one()) {
    ClassId cc = add_node(ENode{Op::Pi, kNoClass, kNoClass, 0});
    merge(c, cc);
  }
}

bool EGraph::merge(ClassId a, ClassId b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (a > b) std::swap(a, b);  // the smaller id stays canonical
  uf_[b] = a;
  Class& ca = classes_[a];
  Class& cb = classes_[b];
  ca.nodes.insert(ca.nodes.end(), cb.nodes.begin(), cb.nodes.end());
  ca.parents.insert(ca.parents.end(), cb.parents.begin(), cb.parents.end());
  cb.nodes.clear();
  cb.parents.clear();
  cb.live = false;
  if (cb.value) {
    if (ca.value) {
      if (!(*ca.value == *cb.value))
        throw std::runtime_error(
            "equality saturation merged two distinct constants (unsound "
            "rule)");
    } else {
      ca.value = cb.value;
    }
    cb.value.reset();
  }
  dirty_.push_back(a);
  return true;
}

void EGraph::repair(ClassId c) {
  auto parents = std::move(classes_[c].parents);
  classes_[c].parents.clear();
  std::unordered_map<ENode, ClassId, ENodeHash> seen;
  for (auto& [pn, pc] : parents) {
    memo_.erase(pn);
    ENode n2 = canon(pn);
    ClassId pc2 = find(pc);
    auto mi = memo_.find(n2);
    if (mi != memo_.end()) {
      ClassId other = find(mi->second);
      if (other != pc2) {
        merge(pc2, other);
        pc2 = find(pc2);
      }
    }
    memo_[n2] = pc2;
    if (auto v = make_value(n2)) set_value(pc2, *v);
    pc2 = find(pc2);
    auto si = seen.find(n2);
    if (si == seen.end()) {
      seen.emplace(n2, pc2);
      classes_[find(c)].parents.push_back({n2, pc2});
    }
  }
}

void EGraph::rebuild() {
  while (!dirty_.empty()) {
    std::vector<ClassId> todo;
    todo.reserve(dirty_.size());
    for (ClassId c : dirty_) todo.push_back(find(c));
    dirty_.clear();
    std::sort(todo.begin(), todo.end());
    todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
    for (ClassId c : todo)
      if (find(c) == c) repair(c);
  }
  // canonicalize and deduplicate every class's node list
  n_nodes_ = 0;
  for (ClassId c = 0; c < classes_.size(); ++c) {
    if (find(c) != c || !classes_[c].live) continue;
    std::unordered_set<ENode, ENodeHash> set;
    std::vector<ENode> out;
    out.reserve(classes_[c].nodes.size());
    for (ENode n : classes_[c].nodes) {
      n = canon(n);
      if (set.insert(n).second) out.push_back(n);
    }
    classes_[c].nodes = std::move(out);
    n_nodes_ += classes_[c].nodes.size();
  }
}

// ---- matching ----

namespace {

struct RuleMatch {
  const Rule* rule;
  ClassId cls;
  Binding bind;
};

}  // namespace

struct EGraph::MatchCtx {
  std::vector<RuleMatch> out;
  size_t cap = 4'000'000;
  bool truncated = false;
};

void EGraph::match_goals(const Pattern& p,
                         std::vector<std::pair<uint32_t, ClassId>>& goals,
                         size_t gi, Binding& b, const Rule& r, ClassId root,
                         MatchCtx& ctx) {
  if (ctx.out.size() >= ctx.cap) {
    ctx.truncated = true;
    return;
  }
  if (gi == goals.size()) {
    ctx.out.push_back({&r, root, b});
    return;
  }
  auto [pidx, cls0] = goals[gi];
  ClassId cls = find(cls0);
  const PatNode& pn = p.nodes[pidx];
  switch (pn.kind) {
    case PatNode::PVar: {
      ClassId& slot = b.m[pn.var];
      if (slot == kNoClass) {
        slot = cls;
        match_goals(p, goals, gi + 1, b, r, root, ctx);
        slot = kNoClass;
      } else if (find(slot) == cls) {
        match_goals(p, goals, gi + 1, b, r, root, ctx);
      }
      return;
    }
    case PatNode::Value: {
      const auto& v = classes_[cls].value;
      if (v && *v == pn.value) match_goals(p, goals, gi + 1, b, r, root, ctx);
      return;
    }
    case PatNode::Node: {
      int ar = op_arity(pn.op);
      for (size_t k = 0; k < classes_[cls].nodes.size(); ++k) {
        ENode n = classes_[cls].nodes[k];
        if (n.op != pn.op) continue;
        if (ar == 0) {
          if (n.payload != pn.payload) continue;
          match_goals(p, goals, gi + 1, b, r, root, ctx);
          continue;
        }
        size_t base = goals.size();
        goals.push_back({pn.k0, n.a});
        if (ar == 2) goals.push_back({pn.k1, n.b});
        match_goals(p, goals, gi + 1, b, r, root, ctx);
        goals.resize(base);
      }
      return;
    }
  }
}

bool EGraph::guard_ok(const Rule& r, const Binding& b) const {
  if (r.guard == GuardKind::None) return true;
  const auto& v = classes_[find(b.m[r.guard_var])].value;
  if (!v) return false;
  switch (r.guard) {
    case GuardKind::NonZero: return !v->is_zero();
    case GuardKind::NonNeg: return !v->coeff.negative();
    case GuardKind::Pos: return !v->coeff.negative() && !v->is_zero();
    case GuardKind::IsConst: return true;
    case GuardKind::None: return true;
  }
  return false;
}

ClassId EGraph::instantiate(const Pattern& p, uint32_t pidx,
                            const Binding& b) {
  const PatNode& pn = p.nodes[pidx];
  if (pn.kind == PatNode::PVar) return find(b.m[pn.var]);
  ENode n{pn.op, kNoClass, kNoClass, pn.payload};
  if (op_arity(pn.op) >= 1) n.a = instantiate(p, pn.k0, b);
  if (op_arity(pn.op) == 2) n.b = instantiate(p, pn.k1, b);
  return add_node(n);
}

SatReport EGraph::saturate(const std::vector<Rule>& rules,
                           const SatLimits& limits,
                           const std::vector<std::pair<ClassId, ClassId>>* goals) {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };
  auto goals_met = [&] {
    if (!goals) return false;
    for (const auto& [a, b] : *goals)
      if (find(a) != find(b)) return false;
    return true;
  };
  SatReport rep;
  rebuild();
  rep.stop = SatStop::IterLimit;
  if (goals_met()) {
    rep.stop = SatStop::Goal;
    rep.e_nodes = n_nodes_;
    rep.e_classes = class_count();
    return rep;
  }
  for (uint32_t iter = 0; iter < limits.max_iterations; ++iter) {
    // classes that contain at least one node of each op
    std::array<std::vector<ClassId>, kOpCount> byop;
    for (ClassId c = 0; c < classes_.size(); ++c) {
      if (find(c) != c || !classes_[c].live) continue;
      for (const ENode& n : classes_[c].nodes) {
        auto& v = byop[static_cast<size_t>(n.op)];
        if (v.empty() || v.back() != c) v.push_back(c);
      }
    }

    MatchCtx ctx;
    std::vector<std::pair<uint32_t, ClassId>> goals;
    for (const Rule& r : rules) {
      const PatNode& rootpat = r.lhs.nodes[r.lhs.root];
      for (ClassId c : byop[static_cast<size_t>(rootpat.op)]) {
        Binding b;
        goals.clear();
        goals.push_back({r.lhs.root, c});
        match_goals(r.lhs, goals, 0, b, r, c, ctx);
      }
      if (elapsed() > limits.max_seconds) break;
    }

    bool changed = false;
    size_t nodes_before = n_nodes_;
    bool aborted = false;
    for (const RuleMatch& m : ctx.out) {
      if (!guard_ok(*m.rule, m.bind)) continue;
      ClassId rhsc = instantiate(m.rule->rhs, m.rule->rhs.root, m.bind);
      changed |= merge(m.cls, rhsc);
      if (n_nodes_ > limits.max_nodes) {
        rep.stop = SatStop::NodeLimit;
        aborted = true;
        break;
      }
      if ((&m - ctx.out.data()) % 256 == 0 && elapsed() > limits.max_seconds) {
        rep.stop = SatStop::TimeLimit;
        aborted = true;
        break;
      }
    }
    rebuild();
    rep.iterations = iter + 1;
    if (goals_met()) {
      rep.stop = SatStop::Goal;
      break;
    }
    if (aborted) break;
    if (n_nodes_ != nodes_before) changed = true;
    if (!changed && !ctx.truncated) {
      rep.stop = SatStop::Saturated;
      break;
    }
    if (n_nodes_ > limits.max_nodes) {
      rep.stop = SatStop::NodeLimit;
      break;
    }
    if (elapsed() > limits.max_seconds) {
      rep.stop = SatStop::TimeLimit;
      break;
    }
  }
  rep.e_nodes = n_nodes_;
  rep.e_classes = class_count();
  return rep;
}

// ---- extraction ----

namespace {

// (operator ordinal, child class ids, payload): the deterministic preference
// among equal-cost nodes
bool node_less(const ENode& x, const ENode& y) {
  if (x.op != y.op) return x.op < y.op;
  if (x.a != y.a) return x.a < y.a;
  if (x.b != y.b) return x.b < y.b;
  return x.payload < y.payload;
}

}  // namespace

struct EGraph::Extractor {
  EGraph& g;
  const CostTable& table;
  std::vector<double> cost;
  std::vector<ENode> best;
  std::vector<char> has_best;
  std::vector<char> frozen;
  std::vector<ExprId> frozen_expr;

  explicit Extractor(EGraph& graph, const CostTable& t)
      : g(graph),
        table(t),
        cost(graph.classes_.size()),
        best(graph.classes_.size()),
        has_best(graph.classes_.size(), 0),
        frozen(graph.classes_.size(), 0),
        frozen_expr(graph.classes_.size(), kNoExpr) {}

  void relax() {
    const double inf = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < cost.size(); ++c)
      if (!frozen[c]) {
        cost[c] = inf;
        has_best[c] = 0;
      }
    bool moved = true;
    while (moved) {
      moved = false;
      for (ClassId c = 0; c < g.classes_.size(); ++c) {
        if (g.find(c) != c || !g.classes_[c].live || frozen[c]) continue;
        for (const ENode& n : g.classes_[c].nodes) {
          double k = table.of(n.op);
          int ar = op_arity(n.op);
          if (ar >= 1) k += cost[g.find(n.a)];
          if (ar == 2) k += cost[g.find(n.b)];
          if (k == std::numeric_limits<double>::infinity()) continue;
          if (k < cost[c] || (k == cost[c] && (!has_best[c] ||
                                               node_less(n, best[c])))) {
            if (k < cost[c]) moved = true;
            cost[c] = k;
            best[c] = n;
            has_best[c] = 1;
          }
        }
      }
    }
  }

  ExprId build(ClassId c, std::unordered_map<ClassId, ExprId>& memo,
               std::vector<ClassId>& traversed) {
    c = g.find(c);
    if (frozen[c]) return frozen_expr[c];
    auto it = memo.find(c);
    if (it != memo.end()) return it->second;
    if (!has_best[c])
      throw std::runtime_error("extraction reached an unreachable e-class");
    const ENode n = best[c];
    int ar = op_arity(n.op);
    ExprId a = ar >= 1 ? build(n.a, memo, traversed) : kNoExpr;
    ExprId b = ar == 2 ? build(n.b, memo, traversed) : kNoExpr;
    ExprId e = ex_raw(n.op, a, b, n.payload);
    memo.emplace(c, e);
    traversed.push_back(c);
    return e;
  }
};

std::vector<ExprId> EGraph::extract_simultaneous(
    const std::vector<ClassId>& roots, const CostTable& table) {
  rebuild();
  Extractor ex(*this, table);
  std::vector<ExprId> out;
  out.reserve(roots.size());
  for (size_t k = 0; k < roots.size(); ++k) {
    ex.relax();
    std::unordered_map<ClassId, ExprId> memo;
    std::vector<ClassId> traversed;
    out.push_back(ex.build(roots[k], memo, traversed));
    for (ClassId c : traversed) {
      ex.frozen[c] = 1;
      ex.frozen_expr[c] = memo.at(c);
      ex.cost[c] = 0.0;
    }
  }
  return out;
}

ExprId EGraph::extract(ClassId root, const CostTable& table) {
  return extract_simultaneous({root}, table)[0];
}

}  // namespace qgl
