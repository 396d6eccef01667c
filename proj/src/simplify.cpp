#include "qgl/simplify.hpp"

#include "qgl/cexpr.hpp"
#include "qgl/egraph.hpp"

namespace qgl {

SimplifyResult simplify_exprs(const std::vector<ExprId>& roots,
                              const RuleSet& rules, const SatLimits& limits,
                              const CostTable& table) {
  SimplifyResult out;
  EGraph g;
  std::vector<ClassId> cls;
  cls.reserve(roots.size());
  for (ExprId r : roots) {
    cls.push_back(g.add_expr(r));
    out.cost_before.push_back(cost_of(r, table));
  }
  out.report = g.saturate(rules, limits);
  out.exprs = g.extract_simultaneous(cls, table);
  for (ExprId e : out.exprs) out.cost_after.push_back(cost_of(e, table));
  return out;
}

ExprId simplify_expr(ExprId root, const RuleSet& rules, const SatLimits& limits,
                     const CostTable& table) {
  return simplify_exprs({root}, rules, limits, table).exprs[0];
}

UnitaryExprMatrix simplify_matrix(const UnitaryExprMatrix& m,
                                  const RuleSet& rules, const SatLimits& limits,
                                  const CostTable& table, SatReport* report) {
  std::vector<ExprId> roots;
  roots.reserve(m.elems.size() * 2);
  for (const CExpr& e : m.elems) {
    roots.push_back(e.re);
    roots.push_back(e.im);
  }
  SimplifyResult r = simplify_exprs(roots, rules, limits, table);
  if (report) *report = r.report;
  UnitaryExprMatrix out = m;
  for (size_t k = 0; k < m.elems.size(); ++k)
    out.elems[k] = CExpr{r.exprs[2 * k], r.exprs[2 * k + 1]};
  return out;
}

}  // namespace qgl
