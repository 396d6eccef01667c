#include "qgl/module.hpp"

#include <fmt/format.h>

#include <mutex>

#include "qgl/simplify.hpp"

namespace qgl {

namespace {

std::shared_ptr<const CompiledExpr> compile_uncached(const UnitaryExprMatrix& u,
                                                     const SatLimits& limits) {
  std::vector<UnitaryExprMatrix> grads = differentiate(u);

  std::vector<ExprId> roots;
  roots.reserve(2 * u.elems.size() * (1 + grads.size()));
  auto push = [&](const UnitaryExprMatrix& m) {
    for (const CExpr& e : m.elems) {
      roots.push_back(e.re);
      roots.push_back(e.im);
    }
  };
  push(u);
  for (const auto& g : grads) push(g);

  SimplifyResult sr = simplify_exprs(roots, default_rules(), limits);

  size_t at = 0;
  auto pull = [&](UnitaryExprMatrix m) {
    for (CExpr& e : m.elems) {
      e.re = sr.exprs[at++];
      e.im = sr.exprs[at++];
    }
    return m;
  };
  UnitaryExprMatrix su = pull(u);
  auto out = std::make_shared<CompiledExpr>();
  out->radices = u.radices;
  out->dim = u.dim;
  out->n_params = static_cast<uint32_t>(u.params.size());
  out->unitary = compile_kernel(su, KernelInit::Identity);
  out->gradients.reserve(grads.size());
  for (const auto& g : grads)
    out->gradients.push_back(compile_kernel(pull(g), KernelInit::Zero));
  return out;
}

}  // namespace

SatLimits module_sat_limits() { return SatLimits{12, 6000, 1.0}; }

std::shared_ptr<const CompiledExpr> compile_expression(const UnitaryExprMatrix& u,
                                                       const SatLimits& limits) {
  return compile_uncached(u, limits);
}

std::shared_ptr<const CompiledExpr> compile_expression(const UnitaryExprMatrix& u) {
  static std::mutex mu;
  static std::unordered_map<std::string, std::shared_ptr<const CompiledExpr>> cache;
  std::string key = canonical_key(u);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto compiled = compile_uncached(u, module_sat_limits());
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(compiled)).first->second;
}

uint32_t ModuleBuilder::intern(const UnitaryExprMatrix& u) {
  std::string key = canonical_key(u);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  uint32_t id = static_cast<uint32_t>(exprs_.size());
  exprs_.push_back(u);
  index_.emplace(std::move(key), id);
  return id;
}

ExpressionModule ModuleBuilder::build(Precision p) const {
  ExpressionModule m;
  m.precision = p;
  m.entries.reserve(exprs_.size());
  for (const auto& u : exprs_) m.entries.push_back(compile_expression(u));
  return m;
}

ExpressionModule build_module(const std::vector<UnitaryExprMatrix>& exprs, Precision p) {
  ModuleBuilder b;
  for (const auto& u : exprs) b.intern(u);
  return b.build(p);
}

}  // namespace qgl
