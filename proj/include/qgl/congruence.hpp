#pragma once

#include <vector>

#include "qgl/rules.hpp"
#include "qgl/unitary.hpp"

namespace qgl {

struct PhaseResult {
  bool congruent = false;
  ExprId phase = kNoExpr;  // over the left matrix's parameters, valid when congruent
};

struct CongruenceWitness {
  std::vector<ExprId> mappings;  // one per rhs parameter, over lhs parameters
  ExprId phase = kNoExpr;
};

enum class SearchStatus : uint8_t { Found, NotFound, Incomplete };

struct CongruenceSearchConfig {
  double budget_seconds = 10.0;
  // rhs parameters may map to the same alphabet element
  bool allow_repeats = true;
  SatLimits limits{};
};

struct CongruenceResult {
  SearchStatus status = SearchStatus::NotFound;
  CongruenceWitness witness;  // valid when status == Found
};

// True iff every element pair lands in one e-class after saturation.
// Parameters are identified positionally. With shared_saturation all
// components enter a single graph saturated once; otherwise each element
// gets its own graph and the first failure exits early.
bool check_equal(const UnitaryExprMatrix& a, const UnitaryExprMatrix& b,
                 bool shared_saturation = true,
                 const SatLimits& limits = SatLimits{});

// Decides whether a = e^{iθ}·b for some θ over the shared parameters and
// returns θ. The quotient of the first symbolically non-zero element pair
// drives the phase extraction; every returned phase is re-verified both
// symbolically and numerically.
PhaseResult check_phase_congruent(const UnitaryExprMatrix& a,
                                  const UnitaryExprMatrix& b,
                                  const SatLimits& limits = SatLimits{});

// Bounded search for parameter mappings f_i such that
// lhs = e^{iθ}·rhs(f_0, ..., f_{m-1}). Candidates are drawn from a generated
// alphabet over the lhs parameters and tried cheapest-first.
CongruenceResult find_congruence(const UnitaryExprMatrix& lhs,
                                 const UnitaryExprMatrix& rhs,
                                 const CongruenceSearchConfig& cfg = {});

}  // namespace qgl
