#pragma once

#include <vector>

#include "qgl/rules.hpp"
#include "qgl/unitary.hpp"

namespace qgl {

struct SimplifyResult {
  std::vector<ExprId> exprs;
  SatReport report;
  std::vector<double> cost_before;
  std::vector<double> cost_after;
};

// Inserts all roots into one e-graph, saturates, and extracts the roots
// simultaneously so shared structure is paid for once.
SimplifyResult simplify_exprs(const std::vector<ExprId>& roots,
                              const RuleSet& rules = default_rules(),
                              const SatLimits& limits = SatLimits{},
                              const CostTable& table = CostTable::defaults());

ExprId simplify_expr(ExprId root, const RuleSet& rules = default_rules(),
                     const SatLimits& limits = SatLimits{},
                     const CostTable& table = CostTable::defaults());

// Simplifies every real and imaginary component of the matrix jointly.
UnitaryExprMatrix simplify_matrix(const UnitaryExprMatrix& m,
                                  const RuleSet& rules = default_rules(),
                                  const SatLimits& limits = SatLimits{},
                                  const CostTable& table = CostTable::defaults(),
                                  SatReport* report = nullptr);

}  // namespace qgl
