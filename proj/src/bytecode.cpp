#include "qvm/bytecode.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace qvm {

namespace {

std::vector<uint32_t> support_union(const std::vector<uint32_t>& a,
                                    const std::vector<uint32_t>& b) {
  std::vector<uint32_t> u;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
  return u;
}

struct Gen {
  const ExprTree& t;
  const CodegenOptions& opts;
  Bytecode bc;
  std::map<std::tuple<uint32_t, uint32_t, bool>, std::vector<uint32_t>> pool;

  Gen(const ExprTree& tree, const CodegenOptions& o) : t(tree), opts(o) {
    bc.radices = tree.radices;
  }

  uint32_t alloc(uint32_t rows, uint32_t cols, bool stat, bool write_target) {
    if (!write_target) {
      auto& free = pool[{rows, cols, stat}];
      if (!free.empty()) {
        uint32_t id = free.back();
        free.pop_back();
        return id;
      }
    }
    bc.buffers.push_back({rows, cols, stat, write_target});
    return static_cast<uint32_t>(bc.buffers.size() - 1);
  }

  // A buffer goes back to its pool only when consumed within its own
  // section: static results read by dynamic code must survive every run.
  void release(uint32_t id, bool consumer_static) {
    const BufferInfo& b = bc.buffers[id];
    if (b.write_target || b.is_static != consumer_static) return;
    pool[{b.rows, b.cols, b.is_static}].push_back(id);
  }

  uint32_t add_perm(const PermSpec& p) {
    for (size_t i = 0; i < bc.perms.size(); ++i)
      if (bc.perms[i] == p) return static_cast<uint32_t>(i);
    bc.perms.push_back(p);
    return static_cast<uint32_t>(bc.perms.size() - 1);
  }

  void emit(bool stat, BInstr in, std::vector<uint32_t> support) {
    if (stat) {
      bc.static_code.push_back(in);
    } else {
      bc.dynamic_code.push_back(in);
      bc.dyn_supports.push_back(std::move(support));
    }
  }

  struct Out {
    uint32_t buf = kNoNode;
    std::vector<uint32_t> support;
  };

  Out gen(uint32_t ni) {
    const TreeNode& n = t.nodes[ni];
    const bool stat = opts.sectioning && n.constant;
    uint32_t d = 1;
    for (uint32_t r : n.radices) d *= r;

    switch (n.kind) {
      case TreeKind::Leaf: {
        std::vector<uint32_t> support;
        for (const ParamBinding& b : n.bindings)
          if (!b.is_const) support.push_back(b.index);
        std::sort(support.begin(), support.end());
        support.erase(std::unique(support.begin(), support.end()), support.end());
        uint32_t wd = static_cast<uint32_t>(bc.writes.size());
        bc.writes.push_back({n.expr, n.bindings});
        uint32_t buf = alloc(d, d, stat, true);
        emit(stat, {BOp::Write, wd, kNoNode, buf}, support);
        return {buf, std::move(support)};
      }
      case TreeKind::MatMul: {
        Out l = gen(n.l), r = gen(n.r);
        std::vector<uint32_t> support = support_union(l.support, r.support);
        uint32_t buf = alloc(d, d, stat, false);
        emit(stat, {BOp::Matmul, l.buf, r.buf, buf}, support);
        release(l.buf, stat);
        release(r.buf, stat);
        return {buf, std::move(support)};
      }
      case TreeKind::Kron: {
        Out l = gen(n.l), r = gen(n.r);
        std::vector<uint32_t> support = support_union(l.support, r.support);
        uint32_t buf = alloc(d, d, stat, false);
        emit(stat, {BOp::Kron, l.buf, r.buf, buf}, support);
        release(l.buf, stat);
        release(r.buf, stat);
        return {buf, std::move(support)};
      }
      case TreeKind::Contract: {
        Out l = gen(n.l), r = gen(n.r);
        std::vector<uint32_t> support = support_union(l.support, r.support);
        uint32_t lb = l.buf, rb = r.buf;
        if (!n.lperm.identity()) {
          uint32_t nb = alloc(n.lperm.out_rows, n.lperm.out_cols, stat, false);
          emit(stat, {BOp::Frpr, lb, add_perm(n.lperm), nb}, l.support);
          release(lb, stat);
          lb = nb;
        }
        if (!n.rperm.identity()) {
          uint32_t nb = alloc(n.rperm.out_rows, n.rperm.out_cols, stat, false);
          emit(stat, {BOp::Frpr, rb, add_perm(n.rperm), nb}, r.support);
          release(rb, stat);
          rb = nb;
        }
        uint32_t mm = alloc(n.lperm.out_rows, n.rperm.out_cols, stat, false);
        emit(stat, {BOp::Matmul, lb, rb, mm}, support);
        release(lb, stat);
        release(rb, stat);
        if (n.operm.identity()) return {mm, std::move(support)};
        uint32_t outb = alloc(n.operm.out_rows, n.operm.out_cols, stat, false);
        emit(stat, {BOp::Frpr, mm, add_perm(n.operm), outb}, support);
        release(mm, stat);
        return {outb, std::move(support)};
      }
      case TreeKind::Perm: {
        Out l = gen(n.l);
        if (n.spec.identity()) return l;
        uint32_t outb = alloc(n.spec.out_rows, n.spec.out_cols, stat, false);
        emit(stat, {BOp::Frpr, l.buf, add_perm(n.spec), outb}, l.support);
        release(l.buf, stat);
        return {outb, std::move(l.support)};
      }
    }
    throw std::logic_error("codegen: bad node");
  }
};

}  // namespace

Bytecode codegen(const ExprTree& t, const CodegenOptions& opts) {
  if (t.root == kNoNode) throw std::invalid_argument("codegen: empty tree");
  Gen g(t, opts);
  Gen::Out out = g.gen(t.root);
  g.bc.out_buffer = out.buf;
  uint32_t np = 0;
  for (const WriteDesc& w : g.bc.writes)
    for (const ParamBinding& b : w.bindings)
      if (!b.is_const) np = std::max(np, b.index + 1);
  g.bc.n_params = np;
  return std::move(g.bc);
}

std::string bytecode_str(const Bytecode& bc) {
  std::string s;
  auto dump = [&](const std::vector<BInstr>& code) {
    for (const BInstr& in : code) {
      switch (in.op) {
        case BOp::Write:
          s += fmt::format("WRITE k{} -> b{}\n", bc.writes[in.a].expr, in.dst);
          break;
        case BOp::Frpr:
          s += fmt::format("FRPR b{} -> b{} {}\n", in.a, in.dst, perm_str(bc.perms[in.b]));
          break;
        case BOp::Matmul: s += fmt::format("MATMUL b{} b{} -> b{}\n", in.a, in.b, in.dst); break;
        case BOp::Kron: s += fmt::format("KRON b{} b{} -> b{}\n", in.a, in.b, in.dst); break;
      }
    }
  };
  s += "STATIC:\n";
  dump(bc.static_code);
  s += "DYNAMIC:\n";
  dump(bc.dynamic_code);
  return s;
}

CompiledCircuit compile_circuit(const Circuit& c, const BuildOptions& bopts,
                                const CodegenOptions& copts, qgl::Precision precision) {
  qgl::ModuleBuilder builder;
  CompiledCircuit cc;
  cc.tree = build_tree(c, builder, bopts);
  if (bopts.fuse) fuse_subtrees(cc.tree, builder, bopts);
  fuse_frpr(cc.tree);
  const_prop(cc.tree);
  cc.bytecode = codegen(cc.tree, copts);
  cc.bytecode.n_params = std::max(cc.bytecode.n_params, c.n_params());
  cc.module = builder.build(precision);
  return cc;
}

namespace {

using json = nlohmann::json;

json kernel_to_json(const qgl::KernelProgram& k) {
  json code = json::array();
  for (const qgl::KInstr& in : k.code)
    code.push_back({static_cast<int>(in.op), in.dst, in.a, in.b, in.imm});
  return {{"code", std::move(code)},
          {"regs", k.n_regs},
          {"params", k.n_params},
          {"dim", k.dim}};
}

qgl::KernelProgram kernel_from_json(const json& j) {
  qgl::KernelProgram k;
  for (const json& in : j.at("code"))
    k.code.push_back({static_cast<qgl::KOp>(in.at(0).get<int>()), in.at(1).get<uint32_t>(),
                      in.at(2).get<uint32_t>(), in.at(3).get<uint32_t>(),
                      in.at(4).get<double>()});
  k.n_regs = j.at("regs").get<uint32_t>();
  k.n_params = j.at("params").get<uint32_t>();
  k.dim = j.at("dim").get<uint32_t>();
  return k;
}

json binding_to_json(const ParamBinding& b) {
  if (b.is_const) return {{"const", b.value}};
  return {{"var", b.index}};
}

ParamBinding binding_from_json(const json& j) {
  if (j.contains("var")) return ParamBinding::param(j.at("var").get<uint32_t>());
  return ParamBinding::constant(j.at("const").get<double>());
}

json instrs_to_json(const std::vector<BInstr>& code) {
  json out = json::array();
  for (const BInstr& in : code)
    out.push_back({static_cast<int>(in.op), in.a, in.b, in.dst});
  return out;
}

std::vector<BInstr> instrs_from_json(const json& j) {
  std::vector<BInstr> code;
  for (const json& in : j)
    code.push_back({static_cast<BOp>(in.at(0).get<int>()), in.at(1).get<uint32_t>(),
                    in.at(2).get<uint32_t>(), in.at(3).get<uint32_t>()});
  return code;
}

}  // namespace

std::string artifact_to_json(const CompiledCircuit& cc) {
  const Bytecode& bc = cc.bytecode;
  json j;
  j["radices"] = bc.radices;
  j["n_params"] = bc.n_params;
  j["precision"] = static_cast<int>(cc.module.precision);
  j["out"] = bc.out_buffer;
  json bufs = json::array();
  for (const BufferInfo& b : bc.buffers)
    bufs.push_back({b.rows, b.cols, b.is_static ? 1 : 0, b.write_target ? 1 : 0});
  j["buffers"] = std::move(bufs);
  json perms = json::array();
  for (const PermSpec& p : bc.perms)
    perms.push_back({{"in", {p.in_rows, p.in_cols}},
                     {"dims", p.dims},
                     {"perm", p.perm},
                     {"out", {p.out_rows, p.out_cols}}});
  j["perms"] = std::move(perms);
  json writes = json::array();
  for (const WriteDesc& w : bc.writes) {
    json ps = json::array();
    for (const ParamBinding& b : w.bindings) ps.push_back(binding_to_json(b));
    writes.push_back({{"expr", w.expr}, {"params", std::move(ps)}});
  }
  j["writes"] = std::move(writes);
  j["supports"] = bc.dyn_supports;
  j["static"] = instrs_to_json(bc.static_code);
  j["dynamic"] = instrs_to_json(bc.dynamic_code);
  json mod = json::array();
  for (const auto& e : cc.module.entries) {
    json grads = json::array();
    for (const auto& g : e->gradients) grads.push_back(kernel_to_json(g));
    mod.push_back({{"radices", e->radices},
                   {"dim", e->dim},
                   {"n_params", e->n_params},
                   {"unitary", kernel_to_json(e->unitary)},
                   {"gradients", std::move(grads)}});
  }
  j["module"] = std::move(mod);
  return j.dump(1);
}

Artifact artifact_from_json(const std::string& text) {
  json j = json::parse(text);
  Artifact a;
  Bytecode& bc = a.bytecode;
  bc.radices = j.at("radices").get<std::vector<uint32_t>>();
  bc.n_params = j.at("n_params").get<uint32_t>();
  bc.out_buffer = j.at("out").get<uint32_t>();
  for (const json& b : j.at("buffers"))
    bc.buffers.push_back({b.at(0).get<uint32_t>(), b.at(1).get<uint32_t>(),
                          b.at(2).get<int>() != 0, b.at(3).get<int>() != 0});
  for (const json& p : j.at("perms")) {
    PermSpec s;
    s.in_rows = p.at("in").at(0).get<uint32_t>();
    s.in_cols = p.at("in").at(1).get<uint32_t>();
    s.dims = p.at("dims").get<std::vector<uint32_t>>();
    s.perm = p.at("perm").get<std::vector<uint32_t>>();
    s.out_rows = p.at("out").at(0).get<uint32_t>();
    s.out_cols = p.at("out").at(1).get<uint32_t>();
    bc.perms.push_back(std::move(s));
  }
  for (const json& w : j.at("writes")) {
    WriteDesc d;
    d.expr = w.at("expr").get<uint32_t>();
    for (const json& b : w.at("params")) d.bindings.push_back(binding_from_json(b));
    bc.writes.push_back(std::move(d));
  }
  bc.dyn_supports = j.at("supports").get<std::vector<std::vector<uint32_t>>>();
  bc.static_code = instrs_from_json(j.at("static"));
  bc.dynamic_code = instrs_from_json(j.at("dynamic"));
  a.module.precision = static_cast<qgl::Precision>(j.at("precision").get<int>());
  for (const json& e : j.at("module")) {
    auto ce = std::make_shared<qgl::CompiledExpr>();
    ce->radices = e.at("radices").get<std::vector<uint32_t>>();
    ce->dim = e.at("dim").get<uint32_t>();
    ce->n_params = e.at("n_params").get<uint32_t>();
    ce->unitary = kernel_from_json(e.at("unitary"));
    for (const json& g : e.at("gradients")) ce->gradients.push_back(kernel_from_json(g));
    a.module.entries.push_back(std::move(ce));
  }
  return a;
}

}  // namespace qvm
