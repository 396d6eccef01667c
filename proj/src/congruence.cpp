#include "qgl/congruence.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <queue>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "qgl/cexpr.hpp"
#include "qgl/egraph.hpp"
#include "qgl/simplify.hpp"

namespace qgl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kZeroTol = 1e-9;

// Positional rename of m's parameters onto `names` (element-wise, collision
// safe because the substitution is simultaneous).
UnitaryExprMatrix with_params(const UnitaryExprMatrix& m,
                              const std::vector<SymId>& names) {
  SubstMap map;
  for (size_t i = 0; i < m.params.size(); ++i)
    if (m.params[i] != names[i]) map.emplace(m.params[i], ex_var(names[i]));
  UnitaryExprMatrix out = m;
  out.params.assign(names.begin(), names.end());
  if (!map.empty())
    for (CExpr& e : out.elems) e = cx_subst(e, map);
  return out;
}

std::vector<std::vector<double>> random_points(size_t nvars, size_t npts,
                                               uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-kTwoPi, kTwoPi);
  std::vector<std::vector<double>> pts(npts, std::vector<double>(nvars));
  for (auto& p : pts)
    for (double& v : p) v = dist(rng);
  return pts;
}

VarMap var_map(const std::vector<SymId>& params, const std::vector<double>& pt) {
  VarMap vm;
  for (size_t i = 0; i < params.size(); ++i) vm.emplace(params[i], pt[i]);
  return vm;
}

// a ≈ e^{iθ}·b at `npts` random parameter points.
bool verify_phase_numeric(const UnitaryExprMatrix& a, const UnitaryExprMatrix& b,
                          ExprId phase, size_t npts, double tol, uint64_t seed) {
  auto pts = random_points(a.params.size(), npts, seed);
  try {
    for (const auto& pt : pts) {
      double th = eval_scalar(phase, var_map(a.params, pt));
      std::complex<double> ph = std::polar(1.0, th);
      CMat av = eval_numeric(a, pt);
      CMat bv = eval_numeric(b, pt);
      for (size_t k = 0; k < av.size(); ++k)
        if (std::abs(av[k] - ph * bv[k]) > tol) return false;
    }
  } catch (const EvalError&) {
    return false;
  }
  return true;
}

// Verifies a candidate phase both numerically and by full symbolic equality
// of a against e^{iθ}·b.
bool confirm_phase(const UnitaryExprMatrix& a, const UnitaryExprMatrix& b,
                   ExprId phase, const SatLimits& limits) {
  if (!verify_phase_numeric(a, b, phase, 100, kZeroTol, 0x9e3779b97f4a7c15ull))
    return false;
  UnitaryExprMatrix shifted = b;
  CExpr ph{ex_cos(phase), ex_sin(phase)};
  for (CExpr& e : shifted.elems) e = cx_mul(ph, e);
  return check_equal(a, shifted, true, limits);
}

// Symbolic zero test per component: syntactic fold first, then a numeric
// probe that can only rule zero out, then saturation against the 0 class
// for the few genuinely ambiguous components.
std::vector<char> zero_components(const std::vector<const UnitaryExprMatrix*>& ms,
                                  const std::vector<SymId>& params,
                                  const SatLimits& limits) {
  std::vector<ExprId> comps;
  for (const UnitaryExprMatrix* m : ms)
    for (const CExpr& e : m->elems) {
      comps.push_back(e.re);
      comps.push_back(e.im);
    }
  std::vector<char> zero(comps.size(), 0);
  std::vector<size_t> ambiguous;
  auto pts = random_points(params.size(), 4, 0xc0ffee1234ull);
  std::vector<VarMap> vms;
  for (const auto& pt : pts) vms.push_back(var_map(params, pt));
  for (size_t k = 0; k < comps.size(); ++k) {
    if (ex_is_zero(comps[k])) {
      zero[k] = 1;
      continue;
    }
    bool maybe_zero = true;
    try {
      for (const VarMap& vm : vms)
        if (std::abs(eval_scalar(comps[k], vm)) > kZeroTol) {
          maybe_zero = false;
          break;
        }
    } catch (const EvalError&) {
      maybe_zero = false;
    }
    if (maybe_zero) ambiguous.push_back(k);
  }
  if (!ambiguous.empty()) {
    EGraph g;
    ClassId zc = g.add_expr(ex_zero());
    std::vector<ClassId> cls;
    std::vector<std::pair<ClassId, ClassId>> goals;
    for (size_t k : ambiguous) {
      cls.push_back(g.add_expr(comps[k]));
      goals.push_back({cls.back(), zc});
    }
    g.saturate(default_rules(), limits, &goals);
    for (size_t i = 0; i < ambiguous.size(); ++i)
      if (g.same_class(cls[i], zc)) zero[ambiguous[i]] = 1;
  }
  return zero;
}

}  // namespace

bool check_equal(const UnitaryExprMatrix& a, const UnitaryExprMatrix& b,
                 bool shared_saturation, const SatLimits& limits) {
  if (a.radices != b.radices)
    throw std::invalid_argument("check_equal: dimension mismatch");
  if (a.params.size() != b.params.size()) return false;
  UnitaryExprMatrix b2 = with_params(b, a.params);

  bool structural = true;
  for (size_t k = 0; k < a.elems.size(); ++k)
    if (!(a.elems[k] == b2.elems[k])) {
      structural = false;
      break;
    }
  if (structural) return true;

  const RuleSet& rules = default_rules();
  if (shared_saturation) {
    EGraph g;
    std::vector<std::pair<ClassId, ClassId>> goals;
    for (size_t k = 0; k < a.elems.size(); ++k) {
      goals.push_back({g.add_expr(a.elems[k].re), g.add_expr(b2.elems[k].re)});
      goals.push_back({g.add_expr(a.elems[k].im), g.add_expr(b2.elems[k].im)});
    }
    g.saturate(rules, limits, &goals);
    for (const auto& [x, y] : goals)
      if (!g.same_class(x, y)) return false;
    return true;
  }
  for (size_t k = 0; k < a.elems.size(); ++k) {
    EGraph g;
    ClassId ar = g.add_expr(a.elems[k].re), br = g.add_expr(b2.elems[k].re);
    ClassId ai = g.add_expr(a.elems[k].im), bi = g.add_expr(b2.elems[k].im);
    std::vector<std::pair<ClassId, ClassId>> goals{{ar, br}, {ai, bi}};
    g.saturate(rules, limits, &goals);
    if (!g.same_class(ar, br) || !g.same_class(ai, bi)) return false;
  }
  return true;
}

PhaseResult check_phase_congruent(const UnitaryExprMatrix& a,
                                  const UnitaryExprMatrix& b,
                                  const SatLimits& limits) {
  if (a.radices != b.radices)
    throw std::invalid_argument("check_phase_congruent: dimension mismatch");
  if (a.params.size() != b.params.size()) return {};
  UnitaryExprMatrix b2 = with_params(b, a.params);

  std::vector<char> zero = zero_components({&a, &b2}, a.params, limits);
  const size_t n = a.elems.size();
  size_t pivot = n;
  for (size_t k = 0; k < n; ++k) {
    bool az = zero[2 * k] && zero[2 * k + 1];
    bool bz = zero[2 * n + 2 * k] && zero[2 * n + 2 * k + 1];
    if (az != bz) return {};
    if (!az && pivot == n) pivot = k;
  }
  if (pivot == n) return {true, ex_zero()};  // both identically zero

  const CExpr& pa = a.elems[pivot];
  const CExpr& pb = b2.elems[pivot];
  const RuleSet& rules = default_rules();

  // phase 0 / π fast paths on the pivot quotient
  {
    EGraph g;
    ClassId ar = g.add_expr(pa.re), ai = g.add_expr(pa.im);
    ClassId br = g.add_expr(pb.re), bi = g.add_expr(pb.im);
    ClassId nbr = g.add_expr(ex_neg(pb.re)), nbi = g.add_expr(ex_neg(pb.im));
    std::vector<std::pair<ClassId, ClassId>> goals{{ar, br}, {ai, bi}};
    g.saturate(rules, limits, &goals);
    if (g.same_class(ar, br) && g.same_class(ai, bi)) {
      if (confirm_phase(a, b2, ex_zero(), limits)) return {true, ex_zero()};
    } else if (g.same_class(ar, nbr) && g.same_class(ai, nbi)) {
      if (confirm_phase(a, b2, ex_pi(), limits)) return {true, ex_pi()};
    }
  }

  // general case: read θ from a top-level sine of Im(a/b)
  CExpr q = cx_div(pa, pb);
  EGraph g;
  ClassId qim = g.add_expr(q.im);
  g.saturate(rules, limits);
  std::vector<ExprId> cands;
  for (const ENode& nd : g.nodes_of(qim))
    if (nd.op == Op::Sin) cands.push_back(g.extract(nd.a, CostTable::defaults()));
  std::sort(cands.begin(), cands.end(), [](ExprId x, ExprId y) {
    double cx = cost_of(x, CostTable::defaults());
    double cy = cost_of(y, CostTable::defaults());
    if (cx != cy) return cx < cy;
    return expr_str(x) < expr_str(y);
  });
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  for (ExprId th : cands)
    if (confirm_phase(a, b2, th, limits)) return {true, th};
  return {};
}

namespace {

// ---- fresh-variable simplification ----------------------------------------

bool var_const_shape(ExprId id) {
  const ExprNode& node = expr_node(id);
  if (node.op == Op::Div)
    return expr_node(node.a).op == Op::Var && expr_node(node.b).op == Op::Const;
  if (node.op == Op::Mul) {
    Op oa = expr_node(node.a).op, ob = expr_node(node.b).op;
    return (oa == Op::Var && ob == Op::Const) || (oa == Op::Const && ob == Op::Var);
  }
  return false;
}

void collect_shapes(ExprId id, std::vector<ExprId>& found,
                    std::unordered_map<ExprId, char>& seen) {
  if (id == kNoExpr || seen.count(id)) return;
  seen.emplace(id, 1);
  if (var_const_shape(id)) found.push_back(id);
  const ExprNode& node = expr_node(id);
  if (op_arity(node.op) >= 1) collect_shapes(node.a, found, seen);
  if (op_arity(node.op) == 2) collect_shapes(node.b, found, seen);
}

ExprId replace_ids(ExprId id, const std::unordered_map<ExprId, ExprId>& repl,
                   std::unordered_map<ExprId, ExprId>& memo) {
  if (auto it = repl.find(id); it != repl.end()) return it->second;
  if (auto it = memo.find(id); it != memo.end()) return it->second;
  const ExprNode& node = expr_node(id);
  ExprId out = id;
  if (op_arity(node.op) > 0) {
    ExprId na = replace_ids(node.a, repl, memo);
    ExprId nb = node.b == kNoExpr ? kNoExpr : replace_ids(node.b, repl, memo);
    if (na != node.a || nb != node.b) out = ex_raw(node.op, na, nb, node.payload);
  }
  memo.emplace(id, out);
  return out;
}

struct FreshRewrite {
  UnitaryExprMatrix m;
  SubstMap back;  // fresh symbol -> original subexpression
};

// Replaces var/const and var·const subexpressions that occur in at least two
// matrix elements with fresh parameters (θ/2 becomes a variable of its own).
FreshRewrite fresh_var_simplify(const UnitaryExprMatrix& a) {
  std::vector<ExprId> order;
  std::unordered_map<ExprId, int> count;
  for (const CExpr& e : a.elems) {
    std::vector<ExprId> found;
    std::unordered_map<ExprId, char> seen;
    collect_shapes(e.re, found, seen);
    collect_shapes(e.im, found, seen);
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end()), found.end());
    for (ExprId id : found)
      if (++count[id] == 1) order.push_back(id);
  }
  std::unordered_map<ExprId, ExprId> repl;
  FreshRewrite out;
  out.m = a;
  uint32_t next = 0;
  for (ExprId id : order) {
    // recheck in first-appearance order so fresh names are deterministic
    auto it = count.find(id);
    if (it == count.end() || it->second < 2) continue;
    SymId fresh = sym_intern("$s" + std::to_string(next++));
    repl.emplace(id, ex_var(fresh));
    out.back.emplace(fresh, id);
  }
  if (repl.empty()) return out;
  std::unordered_map<ExprId, ExprId> memo;
  for (CExpr& e : out.m.elems)
    e = CExpr{replace_ids(e.re, repl, memo), replace_ids(e.im, repl, memo)};
  std::vector<SymId> params;
  for (const CExpr& e : out.m.elems) {
    free_vars(e.re, params);
    free_vars(e.im, params);
  }
  out.m.params = std::move(params);
  return out;
}

// ---- alphabet -------------------------------------------------------------

std::vector<ExprId> build_alphabet(const std::vector<SymId>& vars) {
  std::vector<ExprId> base;
  for (SymId v : vars) base.push_back(ex_var(v));
  base.push_back(ex_zero());
  base.push_back(ex_div(ex_pi(), ex_int(2)));
  base.push_back(ex_pi());

  std::vector<ExprId> sigma = base;
  for (ExprId x : base) {
    sigma.push_back(ex_div(x, ex_int(2)));
    sigma.push_back(ex_mul(ex_int(2), x));
  }
  for (size_t i = 0; i < base.size(); ++i)
    for (size_t j = i + 1; j < base.size(); ++j)
      sigma.push_back(ex_add(base[i], base[j]));
  size_t first_level = sigma.size();
  for (size_t k = 0; k < first_level; ++k) {
    sigma.push_back(ex_mul(sigma[k], ex_pi()));
    sigma.push_back(ex_div(sigma[k], ex_pi()));
  }

  std::sort(sigma.begin(), sigma.end());
  sigma.erase(std::unique(sigma.begin(), sigma.end()), sigma.end());
  std::sort(sigma.begin(), sigma.end(), [](ExprId x, ExprId y) {
    double cx = cost_of(x, CostTable::defaults());
    double cy = cost_of(y, CostTable::defaults());
    if (cx != cy) return cx < cy;
    std::string sx = expr_str(x), sy = expr_str(y);
    if (sx != sy) return sx < sy;
    return x < y;
  });
  return sigma;
}

// Candidate tuples in ascending total-cost order (ties lexicographic).
// Each tuple has a unique parent (decrement its last non-zero position), so
// the frontier enumerates every tuple exactly once.
struct TupleFrontier {
  struct Entry {
    double cost;
    std::vector<uint32_t> idx;
    bool operator>(const Entry& o) const {
      if (cost != o.cost) return cost > o.cost;
      return idx > o.idx;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  std::vector<double> costs;
  size_t width;

  TupleFrontier(const std::vector<double>& elem_costs, size_t m)
      : costs(elem_costs), width(elem_costs.size()) {
    if (m == 0 || width == 0) return;
    Entry e;
    e.idx.assign(m, 0);
    e.cost = costs[0] * static_cast<double>(m);
    heap.push(std::move(e));
  }

  bool next(std::vector<uint32_t>& out) {
    if (heap.empty()) return false;
    Entry e = heap.top();
    heap.pop();
    size_t lastnz = 0;
    for (size_t p = 0; p < e.idx.size(); ++p)
      if (e.idx[p] > 0) lastnz = p;
    for (size_t p = lastnz; p < e.idx.size(); ++p) {
      if (e.idx[p] + 1 >= width) continue;
      Entry child = e;
      child.idx[p] += 1;
      child.cost += costs[child.idx[p]] - costs[child.idx[p] - 1];
      heap.push(std::move(child));
    }
    out = std::move(e.idx);
    return true;
  }
};

// One numeric screening point: zero patterns must match and all non-zero
// element ratios must agree with a single unit-modulus factor.
bool phase_match_numeric(const CMat& av, const CMat& bv) {
  std::complex<double> q{0.0, 0.0};
  bool have_q = false;
  for (size_t k = 0; k < av.size(); ++k) {
    bool za = std::abs(av[k]) <= kZeroTol;
    bool zb = std::abs(bv[k]) <= kZeroTol;
    if (za != zb) return false;
    if (!za && !have_q) {
      q = av[k] / bv[k];
      if (std::abs(std::abs(q) - 1.0) > 1e-6) return false;
      have_q = true;
    }
  }
  if (!have_q) return true;
  for (size_t k = 0; k < av.size(); ++k) {
    if (std::abs(bv[k]) <= kZeroTol) continue;
    if (std::abs(av[k] - q * bv[k]) > 1e-6 * std::max(1.0, std::abs(av[k])))
      return false;
  }
  return true;
}

}  // namespace

CongruenceResult find_congruence(const UnitaryExprMatrix& lhs,
                                 const UnitaryExprMatrix& rhs,
                                 const CongruenceSearchConfig& cfg) {
  if (lhs.radices != rhs.radices)
    throw std::invalid_argument("find_congruence: dimension mismatch");
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  auto out_of_time = [&] {
    return std::chrono::duration<double>(clock::now() - t0).count() >
           cfg.budget_seconds;
  };

  FreshRewrite fr = fresh_var_simplify(lhs);
  const UnitaryExprMatrix& L = fr.m;
  std::vector<ExprId> sigma = build_alphabet(L.params);
  const size_t m = rhs.params.size();

  // screening data: alphabet and lhs evaluated at fixed random points
  auto pts = random_points(L.params.size(), 4, 0xfeedface77ull);
  std::vector<CMat> lvals;
  std::vector<std::vector<double>> svals(pts.size());
  for (size_t p = 0; p < pts.size(); ++p) {
    lvals.push_back(eval_numeric(L, pts[p]));
    VarMap vm = var_map(L.params, pts[p]);
    for (ExprId s : sigma) svals[p].push_back(eval_scalar(s, vm));
  }

  auto polish = [&](ExprId e) {
    ExprId orig = substitute(e, fr.back);
    return simplify_expr(orig, default_rules(), SatLimits{10, 10000, 1.0});
  };

  auto try_candidate = [&](const std::vector<uint32_t>& idx,
                           CongruenceResult& res) {
    // numeric screen at every point before any symbolic work
    std::vector<double> pvals(m);
    for (size_t p = 0; p < pts.size(); ++p) {
      for (size_t i = 0; i < m; ++i) pvals[i] = svals[p][idx[i]];
      CMat rv;
      try {
        rv = eval_numeric(rhs, pvals);
      } catch (const EvalError&) {
        return false;
      }
      if (!phase_match_numeric(lvals[p], rv)) return false;
    }
    SubstMap smap;
    for (size_t i = 0; i < m; ++i) smap.emplace(rhs.params[i], sigma[idx[i]]);
    UnitaryExprMatrix rs = substitute(rhs, smap);
    rs.params = L.params;
    PhaseResult pr = check_phase_congruent(L, rs, cfg.limits);
    if (!pr.congruent) return false;
    res.status = SearchStatus::Found;
    res.witness.mappings.clear();
    for (size_t i = 0; i < m; ++i)
      res.witness.mappings.push_back(polish(sigma[idx[i]]));
    res.witness.phase = polish(pr.phase);
    return true;
  };

  CongruenceResult res;
  if (m == 0) {
    UnitaryExprMatrix rs = rhs;
    rs.params = L.params;
    PhaseResult pr = check_phase_congruent(L, rs, cfg.limits);
    if (pr.congruent) {
      res.status = SearchStatus::Found;
      res.witness.phase = polish(pr.phase);
    }
    return res;
  }

  std::vector<double> costs;
  for (ExprId s : sigma) costs.push_back(cost_of(s, CostTable::defaults()));
  TupleFrontier frontier(costs, m);
  std::vector<uint32_t> idx;
  while (frontier.next(idx)) {
    if (out_of_time()) {
      res.status = SearchStatus::Incomplete;
      return res;
    }
    if (!cfg.allow_repeats) {
      std::vector<uint32_t> s = idx;
      std::sort(s.begin(), s.end());
      if (std::adjacent_find(s.begin(), s.end()) != s.end()) continue;
    }
    if (try_candidate(idx, res)) return res;
  }
  res.status = SearchStatus::NotFound;
  return res;
}

}  // namespace qgl
