#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qgl/egraph.hpp"

namespace qgl {

// One node of a compiled rewrite pattern. Left-hand sides collapse constant
// subtrees to exact values so they match any class with that analysis value;
// right-hand sides stay structural for instantiation.
struct PatNode {
  enum Kind : uint8_t { PVar, Value, Node } kind;
  Op op = Op::Var;               // Node
  uint32_t k0 = 0, k1 = 0;       // Node children (indices into pattern)
  uint32_t payload = 0;          // Node: Const number id / Var symbol id
  PiValue value;                 // Value
  uint32_t var = 0;              // PVar slot
};

struct Pattern {
  std::vector<PatNode> nodes;
  uint32_t root = 0;
};

enum class GuardKind : uint8_t { None, NonZero, NonNeg, Pos, IsConst };

struct Rule {
  std::string name;
  Pattern lhs, rhs;
  GuardKind guard = GuardKind::None;
  uint32_t guard_var = 0;
  uint32_t nvars = 0;
};

using RuleSet = std::vector<Rule>;

// Line format: `name: lhs => rhs [if guard(?x)]`. Blank lines and lines
// starting with '#' are skipped.
RuleSet parse_rules(const std::string& source);
RuleSet load_rules_file(const std::string& path);

// The shipped rule set, loaded once per process.
const RuleSet& default_rules();
std::string default_rules_path();

}  // namespace qgl
