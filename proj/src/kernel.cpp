#include "qgl/kernel.hpp"

#include <fmt/format.h>

#include <optional>
#include <stdexcept>
#include <unordered_map>

#include "qgl/expr.hpp"

namespace qgl {

namespace {

class KernelBuilder {
 public:
  KernelBuilder(const std::vector<SymId>& params, bool use_cse) : use_cse_(use_cse) {
    for (size_t i = 0; i < params.size(); ++i) slot_[params[i]] = static_cast<uint32_t>(i);
    prog_.n_params = static_cast<uint32_t>(params.size());
  }

  uint32_t compile(ExprId e) {
    if (use_cse_) {
      auto it = regs_.find(e);
      if (it != regs_.end()) return it->second;
    }
    uint32_t reg = emit(e);
    if (use_cse_) regs_.emplace(e, reg);
    return reg;
  }

  // Parameter-free subtrees become one LoadConst. Subtrees whose closed-form
  // value is undefined (division by zero and the like) stay symbolic so the
  // run-time NaN propagates instead.
  std::optional<double> const_value(ExprId e) {
    std::vector<SymId> vars;
    free_vars(e, vars);
    if (!vars.empty()) return std::nullopt;
    try {
      return eval_scalar(e, {});
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  KernelProgram take() {
    prog_.n_regs = next_reg_;
    return std::move(prog_);
  }

  void store(KOp op, uint32_t row, uint32_t col, uint32_t src) {
    prog_.code.push_back({op, row, col, src, 0.0});
  }

 private:
  uint32_t fresh() { return next_reg_++; }

  uint32_t emit(ExprId e) {
    if (auto v = const_value(e)) {
      uint32_t dst = fresh();
      prog_.code.push_back({KOp::LoadConst, dst, 0, 0, *v});
      return dst;
    }
    const ExprNode& n = expr_node(e);
    switch (n.op) {
      case Op::Var: {
        auto it = slot_.find(static_cast<SymId>(n.payload));
        if (it == slot_.end())
          throw std::invalid_argument("compile_kernel: unbound variable " +
                                      std::string(sym_name(static_cast<SymId>(n.payload))));
        uint32_t dst = fresh();
        prog_.code.push_back({KOp::LoadParam, dst, it->second, 0, 0.0});
        return dst;
      }
      case Op::Pi:
      case Op::Const:
        throw std::logic_error("compile_kernel: constant not folded");
      case Op::Neg: return unary(KOp::Neg, n.a);
      case Op::Sqrt: return unary(KOp::Sqrt, n.a);
      case Op::Sin: return unary(KOp::Sin, n.a);
      case Op::Cos: return unary(KOp::Cos, n.a);
      case Op::Exp: return unary(KOp::Exp, n.a);
      case Op::Ln: return unary(KOp::Ln, n.a);
      case Op::Add: return binary(KOp::Add, n.a, n.b);
      case Op::Sub: return binary(KOp::Sub, n.a, n.b);
      case Op::Mul: return binary(KOp::Mul, n.a, n.b);
      case Op::Div: return binary(KOp::Div, n.a, n.b);
      case Op::Pow: return binary(KOp::Pow, n.a, n.b);
    }
    throw std::logic_error("compile_kernel: bad op");
  }

  uint32_t unary(KOp op, ExprId a) {
    uint32_t ra = compile(a);
    uint32_t dst = fresh();
    prog_.code.push_back({op, dst, ra, 0, 0.0});
    return dst;
  }

  uint32_t binary(KOp op, ExprId a, ExprId b) {
    uint32_t ra = compile(a);
    uint32_t rb = compile(b);
    uint32_t dst = fresh();
    prog_.code.push_back({op, dst, ra, rb, 0.0});
    return dst;
  }

  bool use_cse_;
  std::unordered_map<SymId, uint32_t> slot_;
  std::unordered_map<ExprId, uint32_t> regs_;
  uint32_t next_reg_ = 0;
  KernelProgram prog_;
};

}  // namespace

KernelProgram compile_kernel(const UnitaryExprMatrix& u, KernelInit init, bool use_cse) {
  KernelBuilder b(u.params, use_cse);
  for (uint32_t r = 0; r < u.dim; ++r) {
    for (uint32_t c = 0; c < u.dim; ++c) {
      const CExpr& el = u.at(r, c);
      double def_re = (init == KernelInit::Identity && r == c) ? 1.0 : 0.0;
      auto component = [&](ExprId e, double def, KOp op) {
        if (auto v = b.const_value(e); v && *v == def) return;
        b.store(op, r, c, b.compile(e));
      };
      component(el.re, def_re, KOp::StoreRe);
      component(el.im, 0.0, KOp::StoreIm);
    }
  }
  KernelProgram k = b.take();
  k.dim = u.dim;
  return k;
}

std::vector<KernelProgram> compile_gradient_kernels(const UnitaryExprMatrix& u) {
  std::vector<KernelProgram> out;
  out.reserve(u.params.size());
  for (const UnitaryExprMatrix& g : differentiate(u))
    out.push_back(compile_kernel(g, KernelInit::Zero));
  return out;
}

std::string kernel_str(const KernelProgram& k) {
  std::string s;
  auto r = [](uint32_t i) { return fmt::format("r{}", i); };
  for (const KInstr& in : k.code) {
    switch (in.op) {
      case KOp::LoadParam: s += fmt::format("{} = param[{}]\n", r(in.dst), in.a); break;
      case KOp::LoadConst: s += fmt::format("{} = {:.17g}\n", r(in.dst), in.imm); break;
      case KOp::Neg: s += fmt::format("{} = neg {}\n", r(in.dst), r(in.a)); break;
      case KOp::Sqrt: s += fmt::format("{} = sqrt {}\n", r(in.dst), r(in.a)); break;
      case KOp::Sin: s += fmt::format("{} = sin {}\n", r(in.dst), r(in.a)); break;
      case KOp::Cos: s += fmt::format("{} = cos {}\n", r(in.dst), r(in.a)); break;
      case KOp::Exp: s += fmt::format("{} = exp {}\n", r(in.dst), r(in.a)); break;
      case KOp::Ln: s += fmt::format("{} = ln {}\n", r(in.dst), r(in.a)); break;
      case KOp::Add: s += fmt::format("{} = {} + {}\n", r(in.dst), r(in.a), r(in.b)); break;
      case KOp::Sub: s += fmt::format("{} = {} - {}\n", r(in.dst), r(in.a), r(in.b)); break;
      case KOp::Mul: s += fmt::format("{} = {} * {}\n", r(in.dst), r(in.a), r(in.b)); break;
      case KOp::Div: s += fmt::format("{} = {} / {}\n", r(in.dst), r(in.a), r(in.b)); break;
      case KOp::Pow: s += fmt::format("{} = {} ^ {}\n", r(in.dst), r(in.a), r(in.b)); break;
      case KOp::StoreRe: s += fmt::format("out[{},{}].re = {}\n", in.dst, in.a, r(in.b)); break;
      case KOp::StoreIm: s += fmt::format("out[{},{}].im = {}\n", in.dst, in.a, r(in.b)); break;
    }
  }
  s += fmt::format("regs={} params={} dim={}\n", k.n_regs, k.n_params, k.dim);
  return s;
}

}  // namespace qgl
