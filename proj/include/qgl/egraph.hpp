#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qgl/expr.hpp"

namespace qgl {

using ClassId = uint32_t;
constexpr ClassId kNoClass = UINT32_MAX;

struct ENode {
  Op op;
  ClassId a = kNoClass, b = kNoClass;
  uint32_t payload = 0;  // Var: symbol id, Const: number id

  bool operator==(const ENode&) const = default;
};

struct ENodeHash {
  size_t operator()(const ENode& n) const {
    size_t h = static_cast<size_t>(n.op);
    h = h * 1099511628211ull ^ n.a;
    h = h * 1099511628211ull ^ n.b;
    return h * 1099511628211ull ^ n.payload;
  }
};

// Per-node extraction cost, keyed by expression kind.
struct CostTable {
  std::array<double, kOpCount> cost;

  static CostTable defaults();
  double of(Op op) const { return cost[static_cast<size_t>(op)]; }
};

// Expanded-tree cost (shared subterms count once per occurrence).
double cost_of(ExprId e, const CostTable& table);

// Exact evaluation of one operator over coeff·π^k values; b null for unary.
// Returns nothing when the result is not representable (or not exact).
std::optional<PiValue> pival_apply(Op op, const PiValue& a, const PiValue* b);

struct SatLimits {
  uint32_t max_iterations = 30;
  size_t max_nodes = 50000;
  double max_seconds = 10.0;
};

enum class SatStop : uint8_t { Saturated, IterLimit, NodeLimit, TimeLimit, Goal };

struct SatReport {
  SatStop stop = SatStop::Saturated;
  uint32_t iterations = 0;
  size_t e_nodes = 0;
  size_t e_classes = 0;
};

const char* sat_stop_name(SatStop s);

struct Rule;     // rules.hpp
struct Pattern;  // rules.hpp

constexpr size_t kMaxRuleVars = 6;

// Pattern variable assignment during e-matching.
struct Binding {
  std::array<ClassId, kMaxRuleVars> m;
  Binding() { m.fill(kNoClass); }
};

class EGraph {
 public:
  ClassId add_expr(ExprId e);
  ClassId add_node(ENode n);
  ClassId find(ClassId c) const;
  bool merge(ClassId a, ClassId b);
  void rebuild();

  // When `goals` is given, saturation stops as soon as every listed pair
  // shares a class (merges are monotone, so the final verdict is unchanged).
  SatReport saturate(const std::vector<Rule>& rules, const SatLimits& limits,
                     const std::vector<std::pair<ClassId, ClassId>>* goals = nullptr);

  bool same_class(ClassId a, ClassId b) const { return find(a) == find(b); }
  const std::optional<PiValue>& value_of(ClassId c) const;
  size_t node_count() const { return n_nodes_; }
  size_t class_count() const;

  // Greedy simultaneous extraction: roots in order; each extracted root's
  // classes become free for the ones after it.
  std::vector<ExprId> extract_simultaneous(const std::vector<ClassId>& roots,
                                           const CostTable& table);
  ExprId extract(ClassId root, const CostTable& table);

  // The e-nodes of a class (canonical form); valid after rebuild().
  const std::vector<ENode>& nodes_of(ClassId c) const;

 private:
  struct Class {
    std::vector<ENode> nodes;
    std::vector<std::pair<ENode, ClassId>> parents;
    std::optional<PiValue> value;
    bool live = true;
  };
  struct MatchCtx;
  struct Extractor;
  friend struct Extractor;

  ENode canon(ENode n) const;
  std::optional<PiValue> make_value(const ENode& n) const;
  void set_value(ClassId c, const PiValue& v);
  void repair(ClassId c);
  void match_goals(const Pattern& p,
                   std::vector<std::pair<uint32_t, ClassId>>& goals, size_t gi,
                   Binding& b, const Rule& r, ClassId root, MatchCtx& ctx);
  bool guard_ok(const Rule& r, const Binding& b) const;
  ClassId instantiate(const Pattern& p, uint32_t pidx, const Binding& b);

  mutable std::vector<ClassId> uf_;
  std::vector<Class> classes_;
  std::unordered_map<ENode, ClassId, ENodeHash> memo_;
  std::unordered_map<PiValue, ClassId, PiValueHash> value_index_;
  std::unordered_map<ExprId, ClassId> expr_cache_;
  std::vector<ClassId> dirty_;
  size_t n_nodes_ = 0;
};

}  // namespace qgl
