#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qgl {

enum class ParseErrorKind : uint8_t {
  Lex,
  Syntax,
  DimensionMismatch,
  ReservedVariable,
  UnsupportedConstruct,
};

const char* parse_error_kind_name(ParseErrorKind k);

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, uint32_t line, uint32_t col,
             const std::string& message);
  ParseErrorKind kind;
  uint32_t line, col;
};

enum class AstKind : uint8_t {
  Var,
  Const,
  Call,
  Matrix,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
};

using AstId = uint32_t;

struct AstNode {
  AstKind kind;
  uint32_t line = 0, col = 0;
  std::string text;            // Var/Call name, Const literal
  std::vector<AstId> kids;     // operands; Matrix: elements row-major
  std::vector<uint32_t> row_lens;  // Matrix only
};

struct GateDef {
  std::string name;
  uint32_t line = 0, col = 0;
  std::vector<uint32_t> radices;  // empty when not declared
  std::vector<std::string> vars;
  std::vector<std::pair<uint32_t, uint32_t>> var_locs;
  AstId body = 0;
};

struct ParsedFile {
  std::vector<GateDef> defs;
  std::vector<AstNode> nodes;

  const AstNode& node(AstId id) const { return nodes[id]; }
};

// Prints with the fewest parentheses that reparse to the same tree.
std::string ast_expr_str(const ParsedFile& file, AstId id);
std::string ast_def_str(const ParsedFile& file, const GateDef& def);
std::string ast_file_str(const ParsedFile& file);

}  // namespace qgl
