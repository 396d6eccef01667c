#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "qgl/cexpr.hpp"

namespace qgl {

using CMat = std::vector<std::complex<double>>;  // dense row-major

// A square matrix of complex expressions over an ordered parameter list.
// Row/column basis order follows the radix vector (first qudit is the most
// significant digit).
struct UnitaryExprMatrix {
  std::vector<uint32_t> radices;
  uint32_t dim = 0;
  std::vector<CExpr> elems;    // dim * dim, row-major
  std::vector<SymId> params;   // declaration order

  CExpr& at(uint32_t r, uint32_t c) { return elems[r * dim + c]; }
  const CExpr& at(uint32_t r, uint32_t c) const { return elems[r * dim + c]; }
  size_t param_index(SymId s) const;
};

uint32_t radix_product(const std::vector<uint32_t>& radices);

UnitaryExprMatrix identity_sym(const std::vector<uint32_t>& radices);

// Parameter list of a combination: a's parameters, then b's not already seen.
UnitaryExprMatrix matmul_sym(const UnitaryExprMatrix& a,
                             const UnitaryExprMatrix& b);
UnitaryExprMatrix kron_sym(const UnitaryExprMatrix& a,
                           const UnitaryExprMatrix& b);
UnitaryExprMatrix dagger(const UnitaryExprMatrix& a);

// Element-wise substitution. Untouched parameters stay in place; parameters
// that were substituted are replaced by the free variables of their image,
// in first-appearance order.
UnitaryExprMatrix substitute(const UnitaryExprMatrix& a, const SubstMap& map);

// Renames parameters positionally (used to give expression instances a
// canonical parameter alphabet before combining them).
UnitaryExprMatrix rename_params_positional(const UnitaryExprMatrix& a,
                                           const std::string& stem,
                                           uint32_t offset = 0);

// Places a's qudits at `positions` within a larger register; remaining target
// qudits get identity factors and indices are permuted back to target order.
UnitaryExprMatrix embed(const UnitaryExprMatrix& a,
                        const std::vector<uint32_t>& target_radices,
                        const std::vector<uint32_t>& positions);

// Per-parameter element-wise partial derivatives, aligned with a.params.
std::vector<UnitaryExprMatrix> differentiate(const UnitaryExprMatrix& a);

// 64-bit tree-walk evaluation; the reference semantics for every compiled
// artifact. Domain errors are reported with the offending element.
CMat eval_numeric(const UnitaryExprMatrix& a,
                  const std::vector<double>& param_values);

std::string matrix_str(const UnitaryExprMatrix& a);

// Identity key invariant under parameter names: equal keys mean structurally
// identical matrices after a positional rename.
std::string canonical_key(const UnitaryExprMatrix& a);

}  // namespace qgl
