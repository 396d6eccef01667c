#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "qcir/circuit.hpp"
#include "qcir/generators.hpp"
#include "qcir/json_io.hpp"
#include "qgl/congruence.hpp"
#include "qgl/egraph.hpp"
#include "qgl/kernel.hpp"
#include "qgl/lower.hpp"
#include "qgl/module.hpp"
#include "qgl/parser.hpp"
#include "qgl/prelude.hpp"
#include "qgl/rules.hpp"
#include "qgl/simplify.hpp"
#include "qgl/unitary.hpp"
#include "qvm/bytecode.hpp"
#include "qvm/tree.hpp"
#include "qvm/vm.hpp"

namespace {

// Exit codes: 0 success / relation holds, 1 refuted or domain failure,
// 2 search gave up within budget, 3 usage error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(fmt::format("cannot open {}", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path));
  out << text;
}

double time_us(const std::function<void()>& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::micro>(t1 - t0).count();
}

std::vector<qgl::LoweredGate> load_defs(const std::string& path) {
  auto defs = qgl::lower_file(qgl::parse_gates(read_file(path)));
  if (defs.empty()) throw UsageError(fmt::format("{}: no definitions", path));
  return defs;
}

std::optional<qgl::GateLibrary> g_extra;

const qgl::GateLibrary* extra_gates() { return g_extra ? &*g_extra : nullptr; }

std::vector<double> parse_params(const std::string& arg) {
  std::string text = arg;
  if (std::ifstream probe(arg); probe.good()) text = read_file(arg);
  std::vector<double> out;
  std::string tok;
  auto flush = [&] {
    if (tok.empty()) return;
    try {
      size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("bad parameter value '{}'", tok));
    }
    tok.clear();
  };
  for (char c : text) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c)))
      flush();
    else
      tok += c;
  }
  flush();
  return out;
}

qgl::SatLimits parse_limits(const std::string& s) {
  qgl::SatLimits lim;
  if (s.empty()) return lim;
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() > 3) throw UsageError("--limits takes iterations,nodes,seconds");
  try {
    if (!parts[0].empty()) lim.max_iterations = static_cast<uint32_t>(std::stoul(parts[0]));
    if (parts.size() > 1 && !parts[1].empty()) lim.max_nodes = std::stoull(parts[1]);
    if (parts.size() > 2 && !parts[2].empty()) lim.max_seconds = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw UsageError(fmt::format("bad --limits value '{}'", s));
  }
  return lim;
}

double mat_cost(const qgl::UnitaryExprMatrix& m) {
  const auto& table = qgl::CostTable::defaults();
  double s = 0;
  for (const auto& e : m.elems) s += qgl::cost_of(e.re, table) + qgl::cost_of(e.im, table);
  return s;
}

int cmd_parse(const std::string& path, bool dump_ast, bool dump_matrix) {
  qgl::ParsedFile pf = qgl::parse_gates(read_file(path));
  if (dump_ast) fmt::print("{}", qgl::ast_file_str(pf));
  auto defs = qgl::lower_file(pf);
  if (dump_matrix)
    for (const auto& g : defs) fmt::print("{}\n", qcir::gate_qgl_source(g.name, g.matrix));
  if (!dump_ast && !dump_matrix) {
    for (const auto& g : defs) {
      std::string rad;
      for (size_t i = 0; i < g.matrix.radices.size(); ++i)
        rad += fmt::format("{}{}", i ? "," : "", g.matrix.radices[i]);
      fmt::print("{}: radices <{}>, dim {}, {} parameter{}\n", g.name, rad, g.matrix.dim,
                 g.matrix.params.size(), g.matrix.params.size() == 1 ? "" : "s");
    }
  }
  return 0;
}

int cmd_simplify(const std::string& path, const std::string& rules_path,
                 const std::string& limits_str) {
  const qgl::RuleSet rules =
      rules_path.empty() ? qgl::default_rules() : qgl::load_rules_file(rules_path);
  const qgl::SatLimits limits = parse_limits(limits_str);
  for (const auto& g : load_defs(path)) {
    qgl::SatReport rep;
    double before = mat_cost(g.matrix);
    auto out = qgl::simplify_matrix(g.matrix, rules, limits, qgl::CostTable::defaults(), &rep);
    fmt::print("{}\n", qcir::gate_qgl_source(g.name, out));
    fmt::print(stderr, "{}: cost {:.1f} -> {:.1f}, stop={} iterations={} e-nodes={}\n", g.name,
               before, mat_cost(out), qgl::sat_stop_name(rep.stop), rep.iterations, rep.e_nodes);
  }
  return 0;
}

int cmd_diff(const std::string& path) {
  for (const auto& g : load_defs(path)) {
    if (g.matrix.params.empty()) {
      fmt::print(stderr, "{}: no parameters\n", g.name);
      continue;
    }
    auto grads = qgl::differentiate(g.matrix);
    for (size_t k = 0; k < grads.size(); ++k) {
      std::string dname =
          fmt::format("d{}_d{}", g.name, qgl::sym_name(g.matrix.params[k]));
      fmt::print("{}\n", qcir::gate_qgl_source(dname, grads[k]));
    }
  }
  return 0;
}

double max_abs_diff(const qgl::CMat& a, const qgl::CMat& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Random-point refutation once the symbolic check came back negative:
// a disagreement is a definite "no", agreement leaves the question open.
int probe_equal(const qgl::UnitaryExprMatrix& a, const qgl::UnitaryExprMatrix& b) {
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> dist(-2 * M_PI, 2 * M_PI);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> xs(a.params.size());
    for (auto& x : xs) x = dist(rng);
    if (max_abs_diff(qgl::eval_numeric(a, xs), qgl::eval_numeric(b, xs)) > 1e-9) {
      fmt::print("not equal (numeric counterexample)\n");
      return 1;
    }
  }
  fmt::print("inconclusive (saturation budget exhausted, no numeric counterexample)\n");
  return 2;
}

int probe_phase(const qgl::UnitaryExprMatrix& a, const qgl::UnitaryExprMatrix& b) {
  std::mt19937_64 rng(0xda3e39cb94b95bdbull);
  std::uniform_real_distribution<double> dist(-2 * M_PI, 2 * M_PI);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> xs(a.params.size());
    for (auto& x : xs) x = dist(rng);
    auto ma = qgl::eval_numeric(a, xs);
    auto mb = qgl::eval_numeric(b, xs);
    size_t k = 0;
    for (size_t i = 1; i < mb.size(); ++i)
      if (std::abs(mb[i]) > std::abs(mb[k])) k = i;
    if (std::abs(mb[k]) < 1e-12) {
      if (max_abs_diff(ma, mb) > 1e-9) {
        fmt::print("not phase-congruent (numeric counterexample)\n");
        return 1;
      }
      continue;
    }
    std::complex<double> q = ma[k] / mb[k];
    double err = 0;
    for (size_t i = 0; i < ma.size(); ++i) err = std::max(err, std::abs(ma[i] - q * mb[i]));
    if (std::abs(std::abs(q) - 1.0) > 1e-9 || err > 1e-9) {
      fmt::print("not phase-congruent (numeric counterexample)\n");
      return 1;
    }
  }
  fmt::print("inconclusive (saturation budget exhausted, no numeric counterexample)\n");
  return 2;
}

int cmd_check(const std::string& mode, const std::string& a_path, const std::string& b_path,
              double budget) {
  const auto defs_a = load_defs(a_path);
  const auto defs_b = load_defs(b_path);
  const auto& a = defs_a.front().matrix;
  const auto& b = defs_b.front().matrix;
  if (a.dim != b.dim) {
    fmt::print("dimension mismatch: {} vs {}\n", a.dim, b.dim);
    return 1;
  }
  if (mode == "congruent") {
    qgl::CongruenceSearchConfig cfg;
    cfg.budget_seconds = budget;
    auto res = qgl::find_congruence(a, b, cfg);
    switch (res.status) {
      case qgl::SearchStatus::Found:
        for (size_t k = 0; k < b.params.size(); ++k)
          fmt::print("{} := {}\n", qgl::sym_name(b.params[k]),
                     qgl::expr_str(res.witness.mappings[k]));
        fmt::print("phase := {}\n", qgl::expr_str(res.witness.phase));
        return 0;
      case qgl::SearchStatus::NotFound:
        fmt::print("no congruence found\n");
        return 1;
      case qgl::SearchStatus::Incomplete:
        fmt::print("search incomplete (budget exhausted)\n");
        return 2;
    }
    return 2;
  }
  if (a.params.size() != b.params.size()) {
    fmt::print("parameter count mismatch: {} vs {}\n", a.params.size(), b.params.size());
    return 1;
  }
  if (mode == "equal") {
    if (qgl::check_equal(a, b)) {
      fmt::print("equal\n");
      return 0;
    }
    return probe_equal(a, b);
  }
  auto pr = qgl::check_phase_congruent(a, b);
  if (pr.congruent) {
    fmt::print("phase-congruent\nphase := {}\n", qgl::expr_str(pr.phase));
    return 0;
  }
  return probe_phase(a, b);
}

int cmd_circuit(const std::vector<std::string>& args, const std::string& out_path) {
  auto parse_n = [](const std::string& s) -> uint32_t {
    try {
      size_t used = 0;
      unsigned long v = std::stoul(s, &used);
      if (used != s.size() || v == 0 || v > 100000) throw std::invalid_argument(s);
      return static_cast<uint32_t>(v);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("bad qudit count '{}'", s));
    }
  };
  std::optional<qcir::Circuit> c;
  if (!args.empty() && args[0] == "qft") {
    if (args.size() != 2) throw UsageError("usage: circuit qft N");
    c = qcir::gen_qft(parse_n(args[1]));
  } else if (!args.empty() && args[0] == "brickwall") {
    if (args.size() != 3) throw UsageError("usage: circuit brickwall thin|thick N");
    qcir::BrickwallKind kind;
    if (args[1] == "thin")
      kind = qcir::BrickwallKind::Thin;
    else if (args[1] == "thick")
      kind = qcir::BrickwallKind::Thick;
    else
      throw UsageError(fmt::format("unknown brickwall flavor '{}'", args[1]));
    c = qcir::gen_brickwall(kind, parse_n(args[2]));
  } else {
    throw UsageError("usage: circuit qft N | circuit brickwall thin|thick N");
  }
  std::string js = qcir::circuit_to_json(*c);
  if (out_path.empty())
    fmt::print("{}\n", js);
  else
    write_file(out_path, js);
  return 0;
}

int cmd_compile(const std::string& path, bool no_fuse, bool dump_tree, bool dump_bc,
                const std::string& out_path, int precision) {
  qcir::Circuit c = qcir::circuit_from_json(read_file(path), extra_gates());
  qvm::BuildOptions bopts;
  bopts.fuse = !no_fuse;
  auto prec = precision == 32 ? qgl::Precision::F32 : qgl::Precision::F64;
  auto cc = qvm::compile_circuit(c, bopts, {}, prec);
  if (dump_tree) fmt::print("{}", qvm::tree_str(cc.tree));
  if (dump_bc) fmt::print("{}", qvm::bytecode_str(cc.bytecode));
  if (!out_path.empty())
    write_file(out_path, qvm::artifact_to_json(cc));
  else if (!dump_tree && !dump_bc)
    fmt::print("{}\n", qvm::artifact_to_json(cc));
  return 0;
}

struct EvalOpts {
  std::string path;
  std::string params_arg;
  bool grad = false;
  int precision = 64;
  uint32_t repeat = 1000;
  bool bench = false;
};

template <class T>
nlohmann::json cplx_json(const std::complex<T>* v, size_t n) {
  auto arr = nlohmann::json::array();
  for (size_t i = 0; i < n; ++i)
    arr.push_back({static_cast<double>(v[i].real()), static_cast<double>(v[i].imag())});
  return arr;
}

template <class T>
int run_eval(const qvm::Bytecode& bc, const qgl::ExpressionModule& mod, const EvalOpts& o) {
  qvm::VM<T> vm(bc, mod);
  std::vector<double> params = parse_params(o.params_arg);
  if (params.size() != vm.n_params())
    throw UsageError(
        fmt::format("circuit takes {} parameters, got {}", vm.n_params(), params.size()));
  auto run_once = [&]() -> bool {
    return o.grad ? vm.run_unitary_and_grad(params.data()) : vm.run_unitary(params.data());
  };
  if (o.bench) {
    bool ok = true;
    for (int i = 0; i < 10; ++i) ok = run_once() && ok;
    auto t0 = std::chrono::steady_clock::now();
    for (uint32_t i = 0; i < o.repeat; ++i) {
      if (!params.empty()) params[0] += 1e-9;
      ok = run_once() && ok;
    }
    auto t1 = std::chrono::steady_clock::now();
    if (!ok) {
      fmt::print(stderr, "error: non-finite result\n");
      return 1;
    }
    double ns = std::chrono::duration<double, std::nano>(t1 - t0).count() /
                std::max(1u, o.repeat);
    nlohmann::json j{{"evals", o.repeat},
                     {"ns_per_eval", ns},
                     {"grad", o.grad},
                     {"precision", o.precision},
                     {"dim", vm.dim()}};
    fmt::print("{}\n", j.dump());
    return 0;
  }
  if (!run_once()) {
    fmt::print(stderr, "error: non-finite result\n");
    return 1;
  }
  size_t n = static_cast<size_t>(vm.dim()) * vm.dim();
  if (!o.grad) {
    fmt::print("{}\n", cplx_json(vm.unitary(), n).dump());
    return 0;
  }
  nlohmann::json j;
  j["unitary"] = cplx_json(vm.unitary(), n);
  auto grads = nlohmann::json::array();
  std::vector<std::complex<T>> g(n);
  for (uint32_t p = 0; p < vm.n_params(); ++p) {
    vm.read_gradient(p, g.data());
    grads.push_back(cplx_json(g.data(), n));
  }
  j["gradients"] = std::move(grads);
  fmt::print("{}\n", j.dump(1));
  return 0;
}

int cmd_eval(const EvalOpts& o) {
  std::string text = read_file(o.path);
  auto j = nlohmann::json::parse(text);
  qvm::Artifact art;
  if (j.contains("writes")) {
    art = qvm::artifact_from_json(text);
  } else {
    qcir::Circuit c = qcir::circuit_from_json(text, extra_gates());
    auto prec = o.precision == 32 ? qgl::Precision::F32 : qgl::Precision::F64;
    auto cc = qvm::compile_circuit(c, {}, {}, prec);
    art.bytecode = std::move(cc.bytecode);
    art.module = std::move(cc.module);
  }
  EvalOpts o2 = o;
  o2.precision = art.module.precision == qgl::Precision::F32 ? 32 : 64;
  if (art.module.precision == qgl::Precision::F32)
    return run_eval<float>(art.bytecode, art.module, o2);
  return run_eval<double>(art.bytecode, art.module, o2);
}

int cmd_kernels_dump(const std::string& path) {
  for (const auto& g : load_defs(path)) {
    auto ce = qgl::compile_expression(g.matrix);
    fmt::print("{} <dim {}>\nunitary:\n{}", g.name, ce->dim, qgl::kernel_str(ce->unitary));
    for (size_t k = 0; k < ce->gradients.size(); ++k)
      fmt::print("grad {}:\n{}", qgl::sym_name(g.matrix.params[k]),
                 qgl::kernel_str(ce->gradients[k]));
  }
  return 0;
}

template <class T>
nlohmann::json kernel_bench_one(const std::string& name, const qgl::CompiledExpr& ce,
                                uint32_t iters) {
  size_t n = static_cast<size_t>(ce.dim) * ce.dim;
  std::vector<std::complex<T>> u(n);
  for (uint32_t r = 0; r < ce.dim; ++r) u[static_cast<size_t>(r) * ce.dim + r] = T(1);
  std::vector<std::vector<std::complex<T>>> g(ce.gradients.size(),
                                              std::vector<std::complex<T>>(n));
  std::vector<T> scratch;
  std::vector<double> params(ce.n_params);
  for (size_t j = 0; j < params.size(); ++j) params[j] = 0.3 + 0.17 * static_cast<double>(j);
  bool ok = true;
  auto eval_u = [&] { ok = qgl::exec_kernel<T>(ce.unitary, params.data(), u.data(), scratch) && ok; };
  auto eval_g = [&] {
    for (size_t k = 0; k < g.size(); ++k)
      ok = qgl::exec_kernel<T>(ce.gradients[k], params.data(), g[k].data(), scratch) && ok;
  };
  for (int i = 0; i < 10; ++i) eval_u();
  auto t0 = std::chrono::steady_clock::now();
  for (uint32_t i = 0; i < iters; ++i) {
    if (!params.empty()) params[0] += 1e-9;
    eval_u();
  }
  auto t1 = std::chrono::steady_clock::now();
  for (int i = 0; i < 10; ++i) eval_g();
  auto t2 = std::chrono::steady_clock::now();
  for (uint32_t i = 0; i < iters; ++i) {
    if (!params.empty()) params[0] += 1e-9;
    eval_g();
  }
  auto t3 = std::chrono::steady_clock::now();
  if (!ok) throw std::runtime_error(fmt::format("{}: non-finite kernel output", name));
  double nu = std::chrono::duration<double, std::nano>(t1 - t0).count() / std::max(1u, iters);
  double ng = std::chrono::duration<double, std::nano>(t3 - t2).count() / std::max(1u, iters);
  return {{"name", name},
          {"dim", ce.dim},
          {"params", ce.n_params},
          {"ns_unitary", nu},
          {"ns_gradient", ng}};
}

int cmd_kernels_bench(const std::string& path, uint32_t iters, int precision) {
  for (const auto& gd : load_defs(path)) {
    auto ce = qgl::compile_expression(gd.matrix);
    nlohmann::json j = precision == 32 ? kernel_bench_one<float>(gd.name, *ce, iters)
                                       : kernel_bench_one<double>(gd.name, *ce, iters);
    j["precision"] = precision;
    fmt::print("{}\n", j.dump());
  }
  return 0;
}

struct NamedU {
  std::string name;
  qgl::UnitaryExprMatrix u;
};

std::vector<NamedU> bench_expressions() {
  const qgl::GateLibrary& lib = qgl::prelude();
  int counter = 0;
  auto fresh = [&](const char* gate) {
    return qgl::rename_params_positional(lib.get(gate), fmt::format("v{}_", counter++));
  };
  auto u3x2 = [&] { return qgl::kron_sym(fresh("U3"), fresh("U3")); };
  std::vector<NamedU> v;
  v.push_back({"U3", lib.get("U3")});
  v.push_back({"CX", lib.get("CX")});
  v.push_back({"U3xU3", u3x2()});
  v.push_back({"CX.(U3xU3)", qgl::matmul_sym(lib.get("CX"), u3x2())});
  {
    auto m = u3x2();
    for (int i = 0; i < 3; ++i)
      m = qgl::matmul_sym(m, qgl::matmul_sym(lib.get("CX"), u3x2()));
    v.push_back({"(U3xU3).(CX.(U3xU3))^3", std::move(m)});
  }
  v.push_back({"CCX.(U3xU3xU3)",
               qgl::matmul_sym(lib.get("CCX"), qgl::kron_sym(qgl::kron_sym(fresh("U3"), fresh("U3")),
                                                             fresh("U3")))});
  v.push_back({"Phase3", lib.get("Phase3")});
  v.push_back({"CSUM", lib.get("CSUM")});
  v.push_back({"CSUM.(Phase3xPhase3)",
               qgl::matmul_sym(lib.get("CSUM"),
                               qgl::kron_sym(fresh("Phase3"), fresh("Phase3")))});
  return v;
}

// One compile per expression, every pipeline stage timed on its own.
int bench_expr_suite() {
  for (const auto& item : bench_expressions()) {
    std::string src = qcir::gate_qgl_source("G", item.u);
    qgl::UnitaryExprMatrix m;
    double t_parse = time_us([&] { m = qgl::lower_file(qgl::parse_gates(src)).front().matrix; });
    std::vector<qgl::UnitaryExprMatrix> grads;
    double t_diff = time_us([&] { grads = qgl::differentiate(m); });
    std::vector<qgl::ExprId> roots;
    auto push_mat = [&](const qgl::UnitaryExprMatrix& mm) {
      for (const auto& e : mm.elems) {
        roots.push_back(e.re);
        roots.push_back(e.im);
      }
    };
    push_mat(m);
    for (const auto& gm : grads) push_mat(gm);
    qgl::EGraph eg;
    std::vector<qgl::ClassId> classes;
    qgl::SatReport rep;
    double t_sat = time_us([&] {
      classes.reserve(roots.size());
      for (auto r : roots) classes.push_back(eg.add_expr(r));
      rep = eg.saturate(qgl::default_rules(), qgl::module_sat_limits());
    });
    std::vector<qgl::ExprId> outs;
    double t_ext =
        time_us([&] { outs = eg.extract_simultaneous(classes, qgl::CostTable::defaults()); });
    size_t idx = 0;
    auto pop_mat = [&](qgl::UnitaryExprMatrix mm) {
      for (auto& e : mm.elems) {
        e.re = outs[idx++];
        e.im = outs[idx++];
      }
      return mm;
    };
    auto sm = pop_mat(m);
    std::vector<qgl::UnitaryExprMatrix> sgrads;
    sgrads.reserve(grads.size());
    for (const auto& gm : grads) sgrads.push_back(pop_mat(gm));
    double t_cg = time_us([&] {
      size_t regs = qgl::compile_kernel(sm).n_regs;
      for (const auto& gm : sgrads)
        regs += qgl::compile_kernel(gm, qgl::KernelInit::Zero).n_regs;
      (void)regs;
    });
    nlohmann::json j{{"name", item.name},
                     {"dim", m.dim},
                     {"params", m.params.size()},
                     {"us_parse", t_parse},
                     {"us_differentiate", t_diff},
                     {"us_saturate", t_sat},
                     {"us_extract", t_ext},
                     {"us_codegen", t_cg},
                     {"sat_stop", qgl::sat_stop_name(rep.stop)},
                     {"e_nodes", rep.e_nodes}};
    fmt::print("{}\n", j.dump());
  }
  return 0;
}

int bench_circuit_suite(uint32_t iters) {
  std::vector<std::pair<std::string, qcir::Circuit>> cs;
  for (uint32_t n : {3u, 4u, 5u}) {
    cs.emplace_back(fmt::format("brickwall-thin-{}", n),
                    qcir::gen_brickwall(qcir::BrickwallKind::Thin, n));
    cs.emplace_back(fmt::format("brickwall-thick-{}", n),
                    qcir::gen_brickwall(qcir::BrickwallKind::Thick, n));
  }
  for (uint32_t n : {3u, 4u, 5u}) cs.emplace_back(fmt::format("qft-{}", n), qcir::gen_qft(n));
  for (const auto& [name, c] : cs) {
    qvm::CompiledCircuit cc;
    double t_compile = time_us([&] { cc = qvm::compile_circuit(c); });
    qvm::VM<double> vm(cc.bytecode, cc.module);
    std::vector<double> params(vm.n_params());
    for (size_t j = 0; j < params.size(); ++j)
      params[j] = 0.2 + 0.01 * static_cast<double>(j % 97);
    bool ok = true;
    for (int i = 0; i < 10; ++i) ok = vm.run_unitary(params.data()) && ok;
    auto t0 = std::chrono::steady_clock::now();
    for (uint32_t i = 0; i < iters; ++i) {
      if (!params.empty()) params[0] += 1e-9;
      ok = vm.run_unitary(params.data()) && ok;
    }
    auto t1 = std::chrono::steady_clock::now();
    if (!ok) throw std::runtime_error(fmt::format("{}: non-finite result", name));
    double ns = std::chrono::duration<double, std::nano>(t1 - t0).count() / std::max(1u, iters);
    nlohmann::json j{{"name", name},          {"qudits", c.n_qudits()},
                     {"params", c.n_params()}, {"dim", vm.dim()},
                     {"us_compile", t_compile}, {"ns_per_eval", ns},
                     {"flops", qvm::tree_flops(cc.tree)}};
    fmt::print("{}\n", j.dump());
  }
  return 0;
}

int bench_qft_build() {
  for (uint32_t n = 8; n <= 1024; n *= 2) {
    std::optional<qcir::Circuit> c;
    double t_gen = time_us([&] { c = qcir::gen_qft(n); });
    std::string js;
    double t_json = time_us([&] { js = qcir::circuit_to_json(*c); });
    nlohmann::json j{{"name", "qft-build"},       {"n", n},
                     {"gates", c->n_instructions()}, {"us_generate", t_gen},
                     {"us_serialize", t_json},    {"json_bytes", js.size()}};
    fmt::print("{}\n", j.dump());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qudit gate compiler and circuit evaluator"};
  app.require_subcommand(1);
  std::string prelude_path;
  app.add_option("--prelude", prelude_path,
                 "extra gate definitions merged over the standard library")
      ->check(CLI::ExistingFile);

  auto* sc_parse = app.add_subcommand("parse", "parse gate definitions and summarize them");
  sc_parse->fallthrough();
  std::string parse_path;
  bool dump_ast = false, dump_matrix = false;
  sc_parse->add_option("file", parse_path, ".qgl input")->required();
  sc_parse->add_flag("--dump-ast", dump_ast, "print the syntax tree");
  sc_parse->add_flag("--dump-matrix", dump_matrix, "print each definition's matrix");

  auto* sc_simplify = app.add_subcommand("simplify", "rewrite definitions into cheaper forms");
  sc_simplify->fallthrough();
  std::string simplify_path, rules_path, limits_str;
  sc_simplify->add_option("file", simplify_path, ".qgl input")->required();
  sc_simplify->add_option("--rules", rules_path, "rewrite rules file")->check(CLI::ExistingFile);
  sc_simplify->add_option("--limits", limits_str, "saturation budget: iterations,nodes,seconds");

  auto* sc_diff = app.add_subcommand("diff", "print per-parameter derivative matrices");
  sc_diff->fallthrough();
  std::string diff_path;
  sc_diff->add_option("file", diff_path, ".qgl input")->required();

  auto* sc_check = app.add_subcommand("check", "decide a relation between two definitions");
  sc_check->fallthrough();
  std::string check_mode, check_a, check_b;
  double check_budget = 10.0;
  sc_check->add_option("--mode", check_mode, "equal, phase, or congruent")
      ->required()
      ->check(CLI::IsMember({"equal", "phase", "congruent"}));
  sc_check->add_option("a", check_a, "left .qgl input")->required();
  sc_check->add_option("b", check_b, "right .qgl input")->required();
  sc_check->add_option("--budget", check_budget, "congruence search budget in seconds");

  auto* sc_circuit = app.add_subcommand("circuit", "generate a circuit as JSON");
  sc_circuit->fallthrough();
  std::vector<std::string> circuit_args;
  std::string circuit_out;
  sc_circuit->add_option("spec", circuit_args, "qft N | brickwall thin|thick N")
      ->required()
      ->expected(-1);
  sc_circuit->add_option("-o,--output", circuit_out, "write to a file instead of stdout");

  auto* sc_compile = app.add_subcommand("compile", "compile a circuit to an artifact");
  sc_compile->fallthrough();
  std::string compile_path, compile_out;
  bool no_fuse = false, dump_tree = false, dump_bc = false;
  int compile_precision = 64;
  sc_compile->add_option("file", compile_path, "circuit JSON input")->required();
  sc_compile->add_flag("--no-fuse", no_fuse, "skip gate fusion");
  sc_compile->add_flag("--dump-tree", dump_tree, "print the contraction tree");
  sc_compile->add_flag("--dump-bytecode", dump_bc, "print the program listing");
  sc_compile->add_option("-o,--output", compile_out, "write the artifact to a file");
  sc_compile->add_option("--precision", compile_precision, "kernel precision")
      ->check(CLI::IsMember({32, 64}));

  auto* sc_eval = app.add_subcommand("eval", "evaluate a circuit or compiled artifact");
  sc_eval->fallthrough();
  EvalOpts eo;
  sc_eval->add_option("file", eo.path, "circuit or artifact JSON")->required();
  sc_eval->add_option("--params", eo.params_arg, "comma-separated values or a file of numbers");
  sc_eval->add_flag("--grad", eo.grad, "also compute parameter gradients");
  sc_eval->add_option("--precision", eo.precision, "kernel precision")
      ->check(CLI::IsMember({32, 64}));
  sc_eval->add_option("--repeat", eo.repeat, "measured evaluations for --bench");
  sc_eval->add_flag("--bench", eo.bench, "time evaluation instead of printing the matrix");

  auto* sc_kernels = app.add_subcommand("kernels", "inspect or time compiled kernels");
  sc_kernels->fallthrough();
  sc_kernels->require_subcommand(1);
  auto* sc_kdump = sc_kernels->add_subcommand("dump", "print kernel programs");
  sc_kdump->fallthrough();
  std::string kdump_path;
  sc_kdump->add_option("file", kdump_path, ".qgl input")->required();
  auto* sc_kbench = sc_kernels->add_subcommand("bench", "time kernel evaluation");
  sc_kbench->fallthrough();
  std::string kbench_path;
  uint32_t kbench_iters = 1000;
  int kbench_precision = 64;
  sc_kbench->add_option("file", kbench_path, ".qgl input")->required();
  sc_kbench->add_option("--iters", kbench_iters, "measured evaluations");
  sc_kbench->add_option("--precision", kbench_precision, "kernel precision")
      ->check(CLI::IsMember({32, 64}));

  auto* sc_bench = app.add_subcommand("bench", "run the built-in benchmark suites");
  sc_bench->fallthrough();
  std::string bench_suite;
  uint32_t bench_iters = 1000;
  sc_bench->add_option("suite", bench_suite, "expr, circuit, or qft-build (default: all)")
      ->check(CLI::IsMember({"expr", "circuit", "qft-build"}));
  sc_bench->add_option("--iters", bench_iters, "measured evaluations per circuit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (!prelude_path.empty()) g_extra = qgl::load_gates_file(prelude_path);
    if (app.got_subcommand(sc_parse)) return cmd_parse(parse_path, dump_ast, dump_matrix);
    if (app.got_subcommand(sc_simplify)) return cmd_simplify(simplify_path, rules_path, limits_str);
    if (app.got_subcommand(sc_diff)) return cmd_diff(diff_path);
    if (app.got_subcommand(sc_check)) return cmd_check(check_mode, check_a, check_b, check_budget);
    if (app.got_subcommand(sc_circuit)) return cmd_circuit(circuit_args, circuit_out);
    if (app.got_subcommand(sc_compile))
      return cmd_compile(compile_path, no_fuse, dump_tree, dump_bc, compile_out,
                         compile_precision);
    if (app.got_subcommand(sc_eval)) return cmd_eval(eo);
    if (app.got_subcommand(sc_kernels)) {
      if (sc_kernels->got_subcommand(sc_kdump)) return cmd_kernels_dump(kdump_path);
      return cmd_kernels_bench(kbench_path, kbench_iters, kbench_precision);
    }
    if (app.got_subcommand(sc_bench)) {
      bool all = bench_suite.empty();
      int rc = 0;
      if (all || bench_suite == "expr") rc = bench_expr_suite();
      if (rc == 0 && (all || bench_suite == "circuit")) rc = bench_circuit_suite(bench_iters);
      if (rc == 0 && (all || bench_suite == "qft-build")) rc = bench_qft_build();
      return rc;
    }
  } catch (const qgl::ParseError& e) {
    fmt::print(stderr, "parse error: {}\n", e.what());
    return 1;
  } catch (const UsageError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 3;
}
