#include "qvm/tree.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

#include "qgl/prelude.hpp"

namespace qvm {

using qcir::InstrKind;
using qcir::Instruction;
using qgl::ModuleBuilder;
using qgl::UnitaryExprMatrix;

namespace {

uint64_t prod_dims(const std::vector<uint32_t>& qs, const std::vector<uint32_t>& radices) {
  uint64_t p = 1;
  for (uint32_t q : qs) p *= radices[q];
  return p;
}

std::vector<uint32_t> sorted_union(const std::vector<uint32_t>& a,
                                   const std::vector<uint32_t>& b) {
  std::vector<uint32_t> u = a;
  u.insert(u.end(), b.begin(), b.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

std::vector<uint32_t> sorted_intersection(const std::vector<uint32_t>& a,
                                          const std::vector<uint32_t>& b) {
  std::set<uint32_t> sa(a.begin(), a.end());
  std::vector<uint32_t> m;
  for (uint32_t q : b)
    if (sa.count(q)) m.push_back(q);
  std::sort(m.begin(), m.end());
  return m;
}

struct ContractPlan {
  std::vector<uint32_t> m;         // contracted qudits, ascending
  std::vector<uint32_t> out_span;  // sorted union
  uint64_t l = 1, k = 1, r = 1;    // mat-mul sides
  PermSpec lperm, rperm, operm;
  double flops = 0, moves = 0;
};

// B is the later operand (applied second), A the earlier. The four-step
// lowering reshapes B to [out(B) (x) in(B\M)] x [in(M)], A to
// [out(M)] x [out(A\M) (x) in(A)], multiplies, and relayouts the result to
// the row-major operator on the sorted union.
ContractPlan make_contract(const std::vector<uint32_t>& sb, const std::vector<uint32_t>& sa,
                           const std::vector<uint32_t>& radices) {
  ContractPlan p;
  p.m = sorted_intersection(sb, sa);
  p.out_span = sorted_union(sb, sa);

  auto index_of = [](const std::vector<uint32_t>& v, uint32_t q) {
    return static_cast<uint32_t>(std::find(v.begin(), v.end(), q) - v.begin());
  };
  auto in_set = [](const std::vector<uint32_t>& v, uint32_t q) {
    return std::find(v.begin(), v.end(), q) != v.end();
  };
  const uint32_t nb = static_cast<uint32_t>(sb.size());
  const uint32_t na = static_cast<uint32_t>(sa.size());

  p.k = prod_dims(p.m, radices);
  uint64_t db = prod_dims(sb, radices);
  uint64_t da = prod_dims(sa, radices);
  p.l = db * (db / p.k);
  p.r = (da / p.k) * da;

  auto dims_of = [&](const std::vector<uint32_t>& s) {
    std::vector<uint32_t> d;
    for (uint32_t q : s) d.push_back(radices[q]);
    for (uint32_t q : s) d.push_back(radices[q]);
    return d;
  };

  // B: axes [0, nb) are out legs, [nb, 2nb) in legs.
  p.lperm.in_rows = p.lperm.in_cols = static_cast<uint32_t>(db);
  p.lperm.dims = dims_of(sb);
  for (uint32_t i = 0; i < nb; ++i) p.lperm.perm.push_back(i);
  for (uint32_t i = 0; i < nb; ++i)
    if (!in_set(p.m, sb[i])) p.lperm.perm.push_back(nb + i);
  for (uint32_t q : p.m) p.lperm.perm.push_back(nb + index_of(sb, q));
  p.lperm.out_rows = static_cast<uint32_t>(p.l);
  p.lperm.out_cols = static_cast<uint32_t>(p.k);

  p.rperm.in_rows = p.rperm.in_cols = static_cast<uint32_t>(da);
  p.rperm.dims = dims_of(sa);
  for (uint32_t q : p.m) p.rperm.perm.push_back(index_of(sa, q));
  for (uint32_t i = 0; i < na; ++i)
    if (!in_set(p.m, sa[i])) p.rperm.perm.push_back(i);
  for (uint32_t i = 0; i < na; ++i) p.rperm.perm.push_back(na + i);
  p.rperm.out_rows = static_cast<uint32_t>(p.k);
  p.rperm.out_cols = static_cast<uint32_t>(p.r);

  // Product legs: [out B (B order)] [in B\M (B order)] [out A\M (A order)]
  // [in A (A order)] -> operator on the union.
  std::vector<uint32_t> legs;  // qudit per axis
  std::map<uint32_t, uint32_t> out_axis, in_axis;
  for (uint32_t i = 0; i < nb; ++i) {
    out_axis[sb[i]] = static_cast<uint32_t>(legs.size());
    legs.push_back(sb[i]);
  }
  for (uint32_t i = 0; i < nb; ++i)
    if (!in_set(p.m, sb[i])) {
      in_axis[sb[i]] = static_cast<uint32_t>(legs.size());
      legs.push_back(sb[i]);
    }
  for (uint32_t i = 0; i < na; ++i)
    if (!in_set(p.m, sa[i])) {
      out_axis[sa[i]] = static_cast<uint32_t>(legs.size());
      legs.push_back(sa[i]);
    }
  for (uint32_t i = 0; i < na; ++i) {
    in_axis[sa[i]] = static_cast<uint32_t>(legs.size());
    legs.push_back(sa[i]);
  }
  p.operm.in_rows = static_cast<uint32_t>(p.l);
  p.operm.in_cols = static_cast<uint32_t>(p.r);
  for (uint32_t q : legs) p.operm.dims.push_back(radices[q]);
  for (uint32_t q : p.out_span) p.operm.perm.push_back(out_axis.at(q));
  for (uint32_t q : p.out_span) p.operm.perm.push_back(in_axis.at(q));
  uint64_t du = prod_dims(p.out_span, radices);
  p.operm.out_rows = p.operm.out_cols = static_cast<uint32_t>(du);

  p.flops = 2.0 * static_cast<double>(p.l) * static_cast<double>(p.k) *
            static_cast<double>(p.r);
  p.moves = (p.lperm.identity() ? 0.0 : static_cast<double>(p.l * p.k)) +
            (p.rperm.identity() ? 0.0 : static_cast<double>(p.k * p.r)) +
            (p.operm.identity() ? 0.0 : static_cast<double>(p.l * p.r));
  return p;
}

struct Greedy {
  const Circuit& c;
  ModuleBuilder& mb;
  const BuildOptions& opts;
  ExprTree t;

  struct Active {
    uint32_t node = kNoNode;
    std::vector<uint32_t> span;  // layout order of the node
    bool alive = false;
  };
  std::vector<Active> act;
  std::vector<std::vector<uint32_t>> wire;  // per qudit, time order

  explicit Greedy(const Circuit& circ, ModuleBuilder& builder, const BuildOptions& o)
      : c(circ), mb(builder), opts(o) {
    t.radices = c.radices();
    wire.resize(c.n_qudits());
  }

  uint32_t new_leaf(uint32_t expr, std::vector<uint32_t> span,
                    std::vector<ParamBinding> bindings) {
    TreeNode n;
    n.kind = TreeKind::Leaf;
    n.expr = expr;
    n.span = span;
    for (uint32_t q : span) n.radices.push_back(c.radices()[q]);
    n.bindings = std::move(bindings);
    t.nodes.push_back(std::move(n));
    uint32_t a = static_cast<uint32_t>(act.size());
    act.push_back({static_cast<uint32_t>(t.nodes.size() - 1), std::move(span), true});
    for (uint32_t q : act.back().span) wire[q].push_back(a);
    return a;
  }

  int position_on(uint32_t a, uint32_t q) const {
    const auto& seq = wire[q];
    for (size_t i = 0; i < seq.size(); ++i)
      if (seq[i] == a) return static_cast<int>(i);
    return -1;
  }

  // +1 when x immediately precedes y on every shared wire, -1 for the
  // converse, 0 when the pair cannot be contracted directly.
  int direction(uint32_t x, uint32_t y, const std::vector<uint32_t>& shared) const {
    int dir = 0;
    for (uint32_t q : shared) {
      int px = position_on(x, q), py = position_on(y, q);
      if (px < 0 || py < 0) return 0;
      int d = py - px;
      if (d != 1 && d != -1) return 0;
      if (dir == 0) dir = d;
      else if (dir != d) return 0;
    }
    return dir;
  }

  std::vector<uint32_t> successors(uint32_t a) const {
    std::vector<uint32_t> out;
    for (uint32_t q : act[a].span) {
      int p = position_on(a, q);
      if (p >= 0 && p + 1 < static_cast<int>(wire[q].size())) out.push_back(wire[q][p + 1]);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // True when a path of length >= 2 runs from x to y, which would make the
  // direct pair contraction reorder an intermediate tensor.
  bool indirect_path(uint32_t x, uint32_t y) const {
    std::deque<uint32_t> queue;
    std::set<uint32_t> seen{x, y};
    for (uint32_t s : successors(x))
      if (s != y && seen.insert(s).second) queue.push_back(s);
    while (!queue.empty()) {
      uint32_t u = queue.front();
      queue.pop_front();
      for (uint32_t s : successors(u)) {
        if (s == y) return true;
        if (seen.insert(s).second) queue.push_back(s);
      }
    }
    return false;
  }

  struct Cand {
    bool triple = false;
    uint32_t x = kNoNode, y = kNoNode;       // pair: earlier, later
    uint32_t a = kNoNode, b = kNoNode, c2 = kNoNode;  // triple members
    bool factors_first = false;              // triple: kron side is earlier
    double cost = 0, score = 0;
    uint32_t k1 = 0, k2 = 0;
    uint64_t stamp = 0;
  };

  double pair_cost(const std::vector<uint32_t>& searlier, const std::vector<uint32_t>& slater,
                   std::vector<uint32_t>* out_span = nullptr) const {
    if (searlier == slater) {
      double d = static_cast<double>(prod_dims(searlier, c.radices()));
      if (out_span) *out_span = searlier;
      return 2.0 * d * d * d;
    }
    ContractPlan p = make_contract(slater, searlier, c.radices());
    if (out_span) *out_span = p.out_span;
    return p.flops + p.moves;
  }

  // Cheapest contraction available to the merged tensor, estimated over its
  // would-be wire neighbours.
  double best_follow_up(const std::vector<uint32_t>& wspan,
                        const std::vector<uint32_t>& members) const {
    std::set<uint32_t> member_set(members.begin(), members.end());
    std::set<uint32_t> neigh;
    for (uint32_t q : wspan) {
      const auto& seq = wire[q];
      for (size_t i = 0; i < seq.size(); ++i) {
        if (!member_set.count(seq[i])) continue;
        if (i > 0 && !member_set.count(seq[i - 1])) neigh.insert(seq[i - 1]);
        if (i + 1 < seq.size() && !member_set.count(seq[i + 1])) neigh.insert(seq[i + 1]);
      }
    }
    double best = 0;
    bool any = false;
    for (uint32_t n : neigh) {
      double cost = pair_cost(act[n].span, wspan);
      if (!any || cost < best) best = cost, any = true;
    }
    return any ? best : 0.0;
  }

  std::vector<Cand> candidates() const {
    std::vector<Cand> out;
    std::set<std::pair<uint32_t, uint32_t>> seen;
    uint64_t stamp = 0;
    for (const auto& seq : wire) {
      for (size_t i = 0; i + 1 < seq.size(); ++i) {
        uint32_t u = seq[i], v = seq[i + 1];
        auto key = std::minmax(u, v);
        if (!seen.insert(key).second) continue;
        std::vector<uint32_t> shared = sorted_intersection(act[u].span, act[v].span);
        int dir = direction(u, v, shared);
        if (dir == 0) continue;
        uint32_t x = dir > 0 ? u : v, y = dir > 0 ? v : u;  // x earlier
        if (indirect_path(x, y)) continue;
        Cand cd;
        cd.x = x;
        cd.y = y;
        std::vector<uint32_t> wspan;
        cd.cost = pair_cost(act[x].span, act[y].span, &wspan);
        cd.score = cd.cost + best_follow_up(wspan, {x, y});
        uint32_t mx = *std::min_element(act[x].span.begin(), act[x].span.end());
        uint32_t my = *std::min_element(act[y].span.begin(), act[y].span.end());
        cd.k1 = std::min(mx, my);
        cd.k2 = std::max(mx, my);
        cd.stamp = stamp++;
        out.push_back(std::move(cd));
      }
    }
    if (opts.kron_fastpath) {
      for (uint32_t ci = 0; ci < act.size(); ++ci) {
        if (!act[ci].alive || act[ci].span.size() != 2) continue;
        uint32_t q0 = act[ci].span[0], q1 = act[ci].span[1];
        for (int side = -1; side <= 1; side += 2) {
          int p0 = position_on(ci, q0), p1 = position_on(ci, q1);
          int n0 = p0 + side, n1 = p1 + side;
          if (n0 < 0 || n1 < 0 || n0 >= static_cast<int>(wire[q0].size()) ||
              n1 >= static_cast<int>(wire[q1].size()))
            continue;
          uint32_t a = wire[q0][n0], b = wire[q1][n1];
          if (a == b || act[a].span.size() >= 2 || act[b].span.size() >= 2) continue;
          Cand cd;
          cd.triple = true;
          cd.a = a;
          cd.b = b;
          cd.c2 = ci;
          cd.factors_first = side < 0;
          double d = static_cast<double>(prod_dims(act[ci].span, c.radices()));
          cd.cost = d * d + 2.0 * d * d * d;
          cd.score = cd.cost + best_follow_up(act[ci].span, {a, b, ci});
          cd.k1 = std::min(q0, q1);
          cd.k2 = std::max(q0, q1);
          cd.stamp = stamp++;
          out.push_back(std::move(cd));
        }
      }
    }
    return out;
  }

  uint32_t merge_actives(uint32_t node, std::vector<uint32_t> span,
                         const std::vector<uint32_t>& members) {
    std::set<uint32_t> member_set(members.begin(), members.end());
    uint32_t w = static_cast<uint32_t>(act.size());
    for (uint32_t m : members) act[m].alive = false;
    act.push_back({node, span, true});
    for (uint32_t q : span) {
      std::vector<uint32_t> next;
      bool placed = false;
      for (uint32_t u : wire[q]) {
        if (member_set.count(u)) {
          if (!placed) next.push_back(w), placed = true;
        } else {
          next.push_back(u);
        }
      }
      if (!placed) next.push_back(w);
      wire[q] = std::move(next);
    }
    return w;
  }

  // Builds the tree node joining earlier tensor x and later tensor y.
  uint32_t contract_pair(uint32_t x, uint32_t y) {
    const Active& ax = act[x];
    const Active& ay = act[y];
    TreeNode n;
    if (ax.span == ay.span) {
      n.kind = TreeKind::MatMul;
      n.l = ay.node;
      n.r = ax.node;
      n.span = ax.span;
    } else {
      ContractPlan p = make_contract(ay.span, ax.span, c.radices());
      n.kind = TreeKind::Contract;
      n.l = ay.node;
      n.r = ax.node;
      n.span = p.out_span;
      n.contracted = p.m;
      n.lperm = std::move(p.lperm);
      n.rperm = std::move(p.rperm);
      n.operm = std::move(p.operm);
    }
    for (uint32_t q : n.span) n.radices.push_back(c.radices()[q]);
    t.nodes.push_back(std::move(n));
    uint32_t node = static_cast<uint32_t>(t.nodes.size() - 1);
    return merge_actives(node, t.nodes[node].span, {x, y});
  }

  void apply(const Cand& cd) {
    if (!cd.triple) {
      contract_pair(cd.x, cd.y);
      return;
    }
    const Active& c2 = act[cd.c2];
    TreeNode kron;
    kron.kind = TreeKind::Kron;
    kron.l = act[cd.a].node;
    kron.r = act[cd.b].node;
    kron.span = c2.span;
    for (uint32_t q : kron.span) kron.radices.push_back(c.radices()[q]);
    t.nodes.push_back(std::move(kron));
    uint32_t kn = static_cast<uint32_t>(t.nodes.size() - 1);

    TreeNode mm;
    mm.kind = TreeKind::MatMul;
    if (cd.factors_first) {
      mm.l = c2.node;
      mm.r = kn;
    } else {
      mm.l = kn;
      mm.r = c2.node;
    }
    mm.span = c2.span;
    mm.radices = t.nodes[kn].radices;
    t.nodes.push_back(std::move(mm));
    uint32_t node = static_cast<uint32_t>(t.nodes.size() - 1);
    merge_actives(node, t.nodes[node].span, {cd.a, cd.b, cd.c2});
  }

  void run() {
    for (;;) {
      std::vector<Cand> cands = candidates();
      if (cands.empty()) break;
      const Cand* best = &cands[0];
      for (const Cand& cd : cands) {
        auto key = std::tie(cd.score, cd.k1, cd.k2, cd.stamp);
        auto bkey = std::tie(best->score, best->k1, best->k2, best->stamp);
        if (key < bkey) best = &cd;
      }
      apply(*best);
    }

    // Disconnected components combine as outer products, lowest qudits first.
    std::vector<uint32_t> alive;
    for (uint32_t i = 0; i < act.size(); ++i)
      if (act[i].alive) alive.push_back(i);
    std::sort(alive.begin(), alive.end(), [&](uint32_t a, uint32_t b) {
      return act[a].span.front() < act[b].span.front();
    });
    while (alive.size() > 1) {
      uint32_t w = contract_pair(alive[0], alive[1]);
      alive.erase(alive.begin(), alive.begin() + 2);
      alive.insert(alive.begin(), w);
    }

    if (alive.empty()) throw std::logic_error("tree: empty circuit");
    uint32_t root_act = alive[0];
    t.root = act[root_act].node;

    std::vector<uint32_t> want(c.n_qudits());
    for (uint32_t i = 0; i < c.n_qudits(); ++i) want[i] = i;
    const std::vector<uint32_t>& have = act[root_act].span;
    if (have != want) {
      // Relayout the root operator into ascending qudit order.
      const uint32_t n = static_cast<uint32_t>(have.size());
      TreeNode pn;
      pn.kind = TreeKind::Perm;
      pn.l = t.root;
      pn.span = want;
      for (uint32_t q : want) pn.radices.push_back(c.radices()[q]);
      uint64_t d = prod_dims(have, c.radices());
      pn.spec.in_rows = pn.spec.in_cols = static_cast<uint32_t>(d);
      for (uint32_t q : have) pn.spec.dims.push_back(c.radices()[q]);
      for (uint32_t q : have) pn.spec.dims.push_back(c.radices()[q]);
      auto index_of = [&](uint32_t q) {
        return static_cast<uint32_t>(std::find(have.begin(), have.end(), q) - have.begin());
      };
      for (uint32_t q : want) pn.spec.perm.push_back(index_of(q));
      for (uint32_t q : want) pn.spec.perm.push_back(n + index_of(q));
      pn.spec.out_rows = pn.spec.out_cols = static_cast<uint32_t>(d);
      t.nodes.push_back(std::move(pn));
      t.root = static_cast<uint32_t>(t.nodes.size() - 1);
    }
  }
};

}  // namespace

ExprTree build_tree(const Circuit& c0, ModuleBuilder& builder, const BuildOptions& opts) {
  Circuit flat = qcir::flatten(c0);
  Greedy g(flat, builder, opts);

  std::vector<bool> used(flat.n_qudits(), false);
  for (uint32_t idx : flat.iter_dag()) {
    const Instruction& in = flat.instruction(idx);
    if (in.kind != InstrKind::Gate)
      throw std::invalid_argument("compile: circuit contains non-unitary instructions");
    uint32_t expr = builder.intern(flat.gate_set()[in.gate]);
    g.new_leaf(expr, in.qudits, in.params);
    for (uint32_t q : in.qudits) used[q] = true;
  }
  for (uint32_t q = 0; q < flat.n_qudits(); ++q) {
    if (used[q]) continue;
    uint32_t expr = builder.intern(qgl::identity_sym({flat.radices()[q]}));
    g.new_leaf(expr, {q}, {});
  }
  g.run();
  return std::move(g.t);
}

void fuse_subtrees(ExprTree& t, ModuleBuilder& builder, const BuildOptions& opts) {
  std::vector<uint32_t> nparams(t.nodes.size(), 0);
  std::vector<bool> fusable(t.nodes.size(), false);
  std::vector<bool> has_children(t.nodes.size(), false);

  // Bottom-up over the construction order (children precede parents).
  for (uint32_t i = 0; i < t.nodes.size(); ++i) {
    const TreeNode& n = t.nodes[i];
    switch (n.kind) {
      case TreeKind::Leaf:
        nparams[i] = static_cast<uint32_t>(n.bindings.size());
        fusable[i] = n.span.size() <= opts.fuse_max_qudits;
        break;
      case TreeKind::MatMul:
      case TreeKind::Kron:
        nparams[i] = nparams[n.l] + nparams[n.r];
        fusable[i] = fusable[n.l] && fusable[n.r] && n.span.size() <= opts.fuse_max_qudits &&
                     nparams[i] <= opts.fuse_max_params;
        has_children[i] = true;
        break;
      case TreeKind::Contract:
      case TreeKind::Perm: has_children[i] = true; break;
    }
  }

  // Fusion roots: fusable nodes with children whose parent is not fusable.
  std::vector<bool> is_root(t.nodes.size(), false);
  if (t.root != kNoNode) is_root[t.root] = fusable[t.root];
  for (uint32_t i = 0; i < t.nodes.size(); ++i) {
    const TreeNode& n = t.nodes[i];
    if (n.kind == TreeKind::Leaf) continue;
    if (n.l != kNoNode && !fusable[i]) is_root[n.l] = fusable[n.l];
    if (n.r != kNoNode && !fusable[i]) is_root[n.r] = fusable[n.r];
  }

  uint32_t counter = 0;
  std::function<UnitaryExprMatrix(uint32_t, std::vector<ParamBinding>&)> build_sym =
      [&](uint32_t i, std::vector<ParamBinding>& binds) -> UnitaryExprMatrix {
    const TreeNode& n = t.nodes[i];
    if (n.kind == TreeKind::Leaf) {
      for (const ParamBinding& b : n.bindings) binds.push_back(b);
      return rename_params_positional(builder.expr(n.expr), fmt::format("$f{}_", counter++));
    }
    UnitaryExprMatrix l = build_sym(n.l, binds);
    UnitaryExprMatrix r = build_sym(n.r, binds);
    return n.kind == TreeKind::MatMul ? matmul_sym(l, r) : kron_sym(l, r);
  };

  for (uint32_t i = 0; i < t.nodes.size(); ++i) {
    if (!is_root[i] || !has_children[i]) continue;
    std::vector<ParamBinding> binds;
    UnitaryExprMatrix fused = build_sym(i, binds);
    TreeNode& n = t.nodes[i];
    n.kind = TreeKind::Leaf;
    n.expr = builder.intern(fused);
    n.bindings = std::move(binds);
    n.l = n.r = kNoNode;
  }
}

void fuse_frpr(ExprTree& t) {
  // compose(first, then): a single relayout equal to `first` followed by
  // `then`; requires matching axis granularity.
  auto compose = [](const PermSpec& first, const PermSpec& then) {
    PermSpec out;
    out.in_rows = first.in_rows;
    out.in_cols = first.in_cols;
    out.dims = first.dims;
    out.out_rows = then.out_rows;
    out.out_cols = then.out_cols;
    out.perm.resize(then.perm.size());
    for (size_t j = 0; j < then.perm.size(); ++j) out.perm[j] = first.perm[then.perm[j]];
    return out;
  };
  auto composable = [](const PermSpec& first, const PermSpec& then) {
    if (first.perm.size() != then.perm.size()) return false;
    for (size_t k = 0; k < then.dims.size(); ++k)
      if (then.dims[k] != first.dims[first.perm[k]]) return false;
    return true;
  };
  auto neutralize = [](PermSpec& s) {
    s.out_rows = s.in_rows;
    s.out_cols = s.in_cols;
    for (size_t i = 0; i < s.perm.size(); ++i) s.perm[i] = static_cast<uint32_t>(i);
  };

  // Each junction between a contraction's output relayout and the consumer's
  // input relayout collapses into one step.
  for (TreeNode& n : t.nodes) {
    auto absorb = [&](uint32_t child, PermSpec& inperm) {
      if (child == kNoNode) return;
      TreeNode& ch = t.nodes[child];
      if (ch.kind != TreeKind::Contract || ch.operm.identity()) return;
      if (!composable(ch.operm, inperm)) return;
      inperm = compose(ch.operm, inperm);
      neutralize(ch.operm);
    };
    if (n.kind == TreeKind::Contract) {
      absorb(n.l, n.lperm);
      absorb(n.r, n.rperm);
    } else if (n.kind == TreeKind::Perm) {
      absorb(n.l, n.spec);
    }
  }
}

void const_prop(ExprTree& t) {
  for (TreeNode& n : t.nodes) {
    if (n.kind == TreeKind::Leaf) {
      n.constant = true;
      for (const ParamBinding& b : n.bindings) n.constant = n.constant && b.is_const;
    } else {
      n.constant = (n.l == kNoNode || t.nodes[n.l].constant) &&
                   (n.r == kNoNode || t.nodes[n.r].constant);
    }
  }
}

double tree_flops(const ExprTree& t) {
  double total = 0;
  std::function<void(uint32_t)> walk = [&](uint32_t i) {
    const TreeNode& n = t.nodes[i];
    if (n.l != kNoNode) walk(n.l);
    if (n.r != kNoNode) walk(n.r);
    double d = 1;
    for (uint32_t r : n.radices) d *= r;
    switch (n.kind) {
      case TreeKind::MatMul: total += 2.0 * d * d * d; break;
      case TreeKind::Kron: total += d * d; break;
      case TreeKind::Contract:
        total += 2.0 * static_cast<double>(n.lperm.out_rows) *
                 static_cast<double>(n.lperm.out_cols) *
                 static_cast<double>(n.rperm.out_cols);
        break;
      default: break;
    }
  };
  if (t.root != kNoNode) walk(t.root);
  return total;
}

std::string perm_str(const PermSpec& p) {
  std::string s = "perm=[";
  for (size_t i = 0; i < p.perm.size(); ++i) s += fmt::format("{}{}", i ? ", " : "", p.perm[i]);
  s += "] dims=[";
  for (size_t i = 0; i < p.dims.size(); ++i) s += fmt::format("{}{}", i ? ", " : "", p.dims[i]);
  s += "]";
  return s;
}

std::string tree_str(const ExprTree& t) {
  std::string out;
  std::function<void(uint32_t, int)> walk = [&](uint32_t i, int depth) {
    const TreeNode& n = t.nodes[i];
    out.append(2 * depth, ' ');
    auto span_str = [&]() {
      std::string s = "[";
      for (size_t j = 0; j < n.span.size(); ++j)
        s += fmt::format("{}{}", j ? ", " : "", n.span[j]);
      return s + "]";
    };
    switch (n.kind) {
      case TreeKind::Leaf: {
        out += fmt::format("LEAF k{} q={} params=[", n.expr, span_str());
        for (size_t j = 0; j < n.bindings.size(); ++j) {
          const ParamBinding& b = n.bindings[j];
          out += j ? ", " : "";
          out += b.is_const ? fmt::format("{}", b.value) : fmt::format("p{}", b.index);
        }
        out += n.constant ? "] const\n" : "]\n";
        break;
      }
      case TreeKind::MatMul:
        out += fmt::format("MATMUL q={}{}\n", span_str(), n.constant ? " const" : "");
        break;
      case TreeKind::Kron:
        out += fmt::format("KRON q={}{}\n", span_str(), n.constant ? " const" : "");
        break;
      case TreeKind::Contract: {
        out += fmt::format("CONTRACT q={} m=[", span_str());
        for (size_t j = 0; j < n.contracted.size(); ++j)
          out += fmt::format("{}{}", j ? ", " : "", n.contracted[j]);
        out += fmt::format("]{}\n", n.constant ? " const" : "");
        break;
      }
      case TreeKind::Perm:
        out += fmt::format("PERM q={} {}{}\n", span_str(), perm_str(n.spec),
                           n.constant ? " const" : "");
        break;
    }
    if (n.l != kNoNode) walk(n.l, depth + 1);
    if (n.r != kNoNode) walk(n.r, depth + 1);
  };
  if (t.root != kNoNode) walk(t.root, 0);
  return out;
}

}  // namespace qvm
