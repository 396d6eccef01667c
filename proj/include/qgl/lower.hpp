#pragma once

#include <string>
#include <vector>

#include "qgl/ast.hpp"
#include "qgl/unitary.hpp"

namespace qgl {

struct LoweredGate {
  std::string name;
  UnitaryExprMatrix matrix;
};

// Turns a parsed definition into a symbolic matrix. Scalars become 1x1
// matrices; when no radices were declared the dimension must be a power of
// two. Throws ParseError for semantic violations.
LoweredGate lower_def(const ParsedFile& file, const GateDef& def);

std::vector<LoweredGate> lower_file(const ParsedFile& file);

}  // namespace qgl
