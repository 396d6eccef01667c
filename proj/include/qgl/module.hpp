#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "qgl/egraph.hpp"
#include "qgl/kernel.hpp"
#include "qgl/unitary.hpp"

namespace qgl {

enum class Precision : uint8_t { F32 = 32, F64 = 64 };

struct CompiledExpr {
  std::vector<uint32_t> radices;
  uint32_t dim = 0;
  uint32_t n_params = 0;
  KernelProgram unitary;
  std::vector<KernelProgram> gradients;
};

// Kernel bundle shared by a whole circuit; entries hold one kernel set per
// distinct unitary expression, referenced by index from bytecode.
struct ExpressionModule {
  Precision precision = Precision::F64;
  std::vector<std::shared_ptr<const CompiledExpr>> entries;
};

// Rewrite budget for the joint simplification pass that runs over the unitary
// and all of its derivatives before compilation. Tighter than the standalone
// simplifier defaults since it runs once per distinct gate expression.
SatLimits module_sat_limits();

// differentiate -> joint equality-saturation pass over unitary and gradient
// elements -> compile. Results for the default budget are cached per process,
// keyed by the positionally renamed expression.
std::shared_ptr<const CompiledExpr> compile_expression(const UnitaryExprMatrix& u);
std::shared_ptr<const CompiledExpr> compile_expression(const UnitaryExprMatrix& u,
                                                       const SatLimits& limits);

// Accumulates distinct expressions (identity decided on positionally renamed
// elements) and compiles them into a module.
class ModuleBuilder {
 public:
  uint32_t intern(const UnitaryExprMatrix& u);
  const UnitaryExprMatrix& expr(uint32_t i) const { return exprs_[i]; }
  size_t size() const { return exprs_.size(); }
  ExpressionModule build(Precision p = Precision::F64) const;

 private:
  std::vector<UnitaryExprMatrix> exprs_;
  std::unordered_map<std::string, uint32_t> index_;
};

ExpressionModule build_module(const std::vector<UnitaryExprMatrix>& exprs,
                              Precision p = Precision::F64);

}  // namespace qgl
