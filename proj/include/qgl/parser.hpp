#pragma once

#include <string>

#include "qgl/ast.hpp"

namespace qgl {

// Parses one or more gate definitions. Throws ParseError.
ParsedFile parse_gates(const std::string& source);

// Parses a bare expression followed by end of input.
ParsedFile parse_expression(const std::string& source, AstId& root);

}  // namespace qgl
