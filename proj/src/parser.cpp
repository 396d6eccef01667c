#include "qgl/parser.hpp"

#include <cstdint>
#include <vector>

#include <fmt/format.h>

namespace qgl {

const char* parse_error_kind_name(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::Lex: return "lex";
    case ParseErrorKind::Syntax: return "syntax";
    case ParseErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ParseErrorKind::ReservedVariable: return "reserved-variable";
    case ParseErrorKind::UnsupportedConstruct: return "unsupported-construct";
  }
  return "?";
}

ParseError::ParseError(ParseErrorKind kind_, uint32_t line_, uint32_t col_,
                       const std::string& message)
    : std::runtime_error(fmt::format("{}:{}: {} error: {}", line_, col_,
                                     parse_error_kind_name(kind_), message)),
      kind(kind_),
      line(line_),
      col(col_) {}

namespace {

struct Token {
  enum Kind { Ident, Int, Float, Punct, End } kind;
  std::string text;
  uint32_t line = 0, col = 0;
  char punct = 0;
};

uint32_t utf8_next(const std::string& s, size_t& i, uint32_t line,
                   uint32_t col) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) {
    ++i;
    return c;
  }
  int extra = c >= 0xF0 ? 3 : c >= 0xE0 ? 2 : c >= 0xC0 ? 1 : -1;
  if (extra < 0 || i + extra >= s.size())
    throw ParseError(ParseErrorKind::Lex, line, col, "invalid UTF-8 sequence");
  uint32_t cp = c & (0x3F >> extra);
  for (int k = 1; k <= extra; ++k) {
    unsigned char cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xC0) != 0x80)
      throw ParseError(ParseErrorKind::Lex, line, col,
                       "invalid UTF-8 sequence");
    cp = (cp << 6) | (cc & 0x3F);
  }
  i += extra + 1;
  return cp;
}

void utf8_append(std::string& s, uint32_t cp) {
  if (cp < 0x80) {
    s += static_cast<char>(cp);
  } else if (cp < 0x800) {
    s += static_cast<char>(0xC0 | (cp >> 6));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    s += static_cast<char>(0xE0 | (cp >> 12));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    s += static_cast<char>(0xF0 | (cp >> 18));
    s += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_letter_cp(uint32_t cp) {
  if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || cp == '_')
    return true;
  return (cp >= 0x370 && cp <= 0x3FF) || (cp >= 0x1F00 && cp <= 0x1FFF);
}

bool is_digit_cp(uint32_t cp) { return cp >= '0' && cp <= '9'; }

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  size_t i = 0;
  uint32_t line = 1, col = 1;
  static const std::string punct = "<>(){}[],+-*/^~";
  while (i < src.size()) {
    uint32_t tl = line, tc = col;
    size_t start = i;
    uint32_t cp = utf8_next(src, i, line, col);
    if (cp == '\n') {
      ++line;
      col = 1;
      continue;
    }
    if (cp == ' ' || cp == '\t' || cp == '\r') {
      ++col;
      continue;
    }
    if (is_digit_cp(cp)) {
      Token t{Token::Int, "", tl, tc, 0};
      t.text += static_cast<char>(cp);
      ++col;
      while (i < src.size() && is_digit_cp(static_cast<unsigned char>(src[i]))) {
        t.text += src[i++];
        ++col;
      }
      if (i < src.size() && src[i] == '.') {
        t.kind = Token::Float;
        t.text += src[i++];
        ++col;
        if (i >= src.size() || !is_digit_cp(static_cast<unsigned char>(src[i])))
          throw ParseError(ParseErrorKind::Lex, line, col,
                           "expected digit after decimal point");
        while (i < src.size() &&
               is_digit_cp(static_cast<unsigned char>(src[i]))) {
          t.text += src[i++];
          ++col;
        }
      }
      out.push_back(std::move(t));
      continue;
    }
    if (is_letter_cp(cp)) {
      Token t{Token::Ident, "", tl, tc, 0};
      utf8_append(t.text, cp);
      ++col;
      while (i < src.size()) {
        size_t save = i;
        uint32_t l2 = line, c2 = col;
        uint32_t cp2 = utf8_next(src, i, l2, c2);
        if (!is_letter_cp(cp2) && !is_digit_cp(cp2)) {
          i = save;
          break;
        }
        utf8_append(t.text, cp2);
        ++col;
      }
      out.push_back(std::move(t));
      continue;
    }
    if (cp < 0x80 && punct.find(static_cast<char>(cp)) != std::string::npos) {
      out.push_back({Token::Punct, src.substr(start, 1), tl, tc,
                     static_cast<char>(cp)});
      ++col;
      continue;
    }
    std::string shown;
    utf8_append(shown, cp);
    throw ParseError(ParseErrorKind::Lex, tl, tc,
                     fmt::format("unexpected character '{}'", shown));
  }
  out.push_back({Token::End, "", line, col, 0});
  return out;
}

class Parser {
 public:
  explicit Parser(const std::string& src) : toks_(lex(src)) {}

  ParsedFile parse_file() {
    while (!at_end()) defs_.push_back(parse_def());
    ParsedFile f;
    f.defs = std::move(defs_);
    f.nodes = std::move(nodes_);
    return f;
  }

  ParsedFile parse_single_expression(AstId& root) {
    root = parse_expr();
    if (!at_end())
      throw ParseError(ParseErrorKind::Syntax, peek().line, peek().col,
                       "expected end of input");
    ParsedFile f;
    f.nodes = std::move(nodes_);
    return f;
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::vector<AstNode> nodes_;
  std::vector<GateDef> defs_;

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  bool at_end() const { return peek().kind == Token::End; }

  bool at_punct(char c) const {
    return peek().kind == Token::Punct && peek().punct == c;
  }

  void expect_punct(char c, const char* where) {
    if (!at_punct(c))
      throw ParseError(ParseErrorKind::Syntax, peek().line, peek().col,
                       fmt::format("expected '{}' {}", c, where));
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(ParseErrorKind::Syntax, peek().line, peek().col, msg);
  }

  AstId mk(AstKind kind, uint32_t line, uint32_t col) {
    nodes_.push_back(AstNode{kind, line, col, "", {}, {}});
    return static_cast<AstId>(nodes_.size() - 1);
  }

  GateDef parse_def() {
    if (peek().kind != Token::Ident || peek().text != "utry")
      fail("expected 'utry'");
    GateDef def;
    def.line = peek().line;
    def.col = peek().col;
    ++pos_;
    if (peek().kind != Token::Ident) fail("expected gate name");
    def.name = next().text;
    if (at_punct('<')) {
      ++pos_;
      for (;;) {
        if (peek().kind != Token::Int) fail("expected radix integer");
        const Token& t = next();
        unsigned long v = std::stoul(t.text);
        if (v < 2 || v > 64)
          throw ParseError(ParseErrorKind::DimensionMismatch, t.line, t.col,
                           fmt::format("radix {} out of range", t.text));
        def.radices.push_back(static_cast<uint32_t>(v));
        if (at_punct(',')) {
          ++pos_;
          if (at_punct('>')) break;
          continue;
        }
        break;
      }
      expect_punct('>', "after radix list");
    }
    expect_punct('(', "before parameter list");
    if (!at_punct(')')) {
      for (;;) {
        if (peek().kind != Token::Ident) fail("expected parameter name");
        const Token& t = next();
        if (t.text == "i" || t.text == "e" || t.text == "π")
          throw ParseError(ParseErrorKind::ReservedVariable, t.line, t.col,
                           fmt::format("'{}' is reserved", t.text));
        for (const std::string& prev : def.vars)
          if (prev == t.text)
            throw ParseError(ParseErrorKind::Syntax, t.line, t.col,
                             fmt::format("duplicate parameter '{}'", t.text));
        def.vars.push_back(t.text);
        def.var_locs.push_back({t.line, t.col});
        if (at_punct(',')) {
          ++pos_;
          if (at_punct(')')) break;
          continue;
        }
        break;
      }
    }
    expect_punct(')', "after parameter list");
    expect_punct('{', "before gate body");
    def.body = parse_expr();
    expect_punct('}', "after gate body");
    return def;
  }

  AstId parse_expr() {
    AstId lhs = parse_term();
    while (at_punct('+') || at_punct('-')) {
      const Token& t = next();
      AstId rhs = parse_term();
      AstId n = mk(t.punct == '+' ? AstKind::Add : AstKind::Sub, t.line, t.col);
      nodes_[n].kids = {lhs, rhs};
      lhs = n;
    }
    return lhs;
  }

  AstId parse_term() {
    std::vector<Token> negs;
    while (at_punct('~')) negs.push_back(next());
    AstId lhs = parse_factor();
    for (size_t k = negs.size(); k-- > 0;) {
      AstId n = mk(AstKind::Neg, negs[k].line, negs[k].col);
      nodes_[n].kids = {lhs};
      lhs = n;
    }
    while (at_punct('*') || at_punct('/')) {
      const Token& t = next();
      AstId rhs = parse_factor();
      AstId n = mk(t.punct == '*' ? AstKind::Mul : AstKind::Div, t.line, t.col);
      nodes_[n].kids = {lhs, rhs};
      lhs = n;
    }
    return lhs;
  }

  AstId parse_factor() {
    std::vector<AstId> chain{parse_primary()};
    std::vector<Token> carets;
    while (at_punct('^')) {
      carets.push_back(next());
      chain.push_back(parse_primary());
    }
    AstId rhs = chain.back();
    for (size_t k = chain.size() - 1; k-- > 0;) {
      AstId n = mk(AstKind::Pow, carets[k].line, carets[k].col);
      nodes_[n].kids = {chain[k], rhs};
      rhs = n;
    }
    return rhs;
  }

  AstId parse_primary() {
    const Token& t = peek();
    if (t.kind == Token::Int || t.kind == Token::Float) {
      ++pos_;
      AstId n = mk(AstKind::Const, t.line, t.col);
      nodes_[n].text = t.text;
      return n;
    }
    if (t.kind == Token::Ident) {
      ++pos_;
      if (at_punct('(')) {
        ++pos_;
        AstId n = mk(AstKind::Call, t.line, t.col);
        nodes_[n].text = t.text;
        if (!at_punct(')')) nodes_[n].kids = parse_exprlist(')');
        expect_punct(')', "after function arguments");
        return n;
      }
      AstId n = mk(AstKind::Var, t.line, t.col);
      nodes_[n].text = t.text;
      return n;
    }
    if (at_punct('(')) {
      ++pos_;
      AstId inner = parse_expr();
      expect_punct(')', "after expression");
      return inner;
    }
    if (at_punct('[')) return parse_matrix();
    fail("expected expression");
  }

  std::vector<AstId> parse_exprlist(char close) {
    std::vector<AstId> items;
    for (;;) {
      items.push_back(parse_expr());
      if (at_punct(',')) {
        ++pos_;
        if (at_punct(close)) break;
        continue;
      }
      break;
    }
    return items;
  }

  AstId parse_matrix() {
    const Token& open = peek();
    ++pos_;
    AstId n = mk(AstKind::Matrix, open.line, open.col);
    std::vector<AstId> elems;
    std::vector<uint32_t> lens;
    for (;;) {
      expect_punct('[', "to start matrix row");
      std::vector<AstId> row = parse_exprlist(']');
      expect_punct(']', "after matrix row");
      lens.push_back(static_cast<uint32_t>(row.size()));
      elems.insert(elems.end(), row.begin(), row.end());
      if (at_punct(',')) {
        ++pos_;
        if (at_punct(']')) break;
        continue;
      }
      break;
    }
    expect_punct(']', "after matrix rows");
    nodes_[n].kids = std::move(elems);
    nodes_[n].row_lens = std::move(lens);
    return n;
  }
};

// ---- printing ----

// Doubled precedence levels; a node prints bare iff its level >= the minimum
// required by its context. '~' may only lead a term, so it additionally needs
// the context's permission.
constexpr int kPrecAdd = 2, kPrecMul = 4, kPrecNeg = 5, kPrecPow = 6,
              kPrecAtom = 8;

void print_rec(const ParsedFile& f, AstId id, int minp, bool allow_neg,
               std::string& out) {
  const AstNode& n = f.node(id);
  auto paren = [&](auto&& body) {
    out += '(';
    body();
    out += ')';
  };
  switch (n.kind) {
    case AstKind::Var:
    case AstKind::Const:
      out += n.text;
      return;
    case AstKind::Call: {
      out += n.text;
      out += '(';
      for (size_t k = 0; k < n.kids.size(); ++k) {
        if (k) out += ", ";
        print_rec(f, n.kids[k], 0, true, out);
      }
      out += ')';
      return;
    }
    case AstKind::Matrix: {
      out += '[';
      size_t at = 0;
      for (size_t r = 0; r < n.row_lens.size(); ++r) {
        if (r) out += ", ";
        out += '[';
        for (uint32_t c = 0; c < n.row_lens[r]; ++c, ++at) {
          if (c) out += ", ";
          print_rec(f, n.kids[at], 0, true, out);
        }
        out += ']';
      }
      out += ']';
      return;
    }
    case AstKind::Neg: {
      if (!allow_neg || kPrecNeg < minp) {
        paren([&] { print_rec(f, id, 0, true, out); });
        return;
      }
      out += '~';
      print_rec(f, n.kids[0], kPrecNeg, true, out);
      return;
    }
    case AstKind::Add:
    case AstKind::Sub: {
      if (kPrecAdd < minp) {
        paren([&] { print_rec(f, id, 0, true, out); });
        return;
      }
      print_rec(f, n.kids[0], kPrecAdd, allow_neg, out);
      out += n.kind == AstKind::Add ? " + " : " - ";
      print_rec(f, n.kids[1], kPrecAdd + 1, true, out);
      return;
    }
    case AstKind::Mul:
    case AstKind::Div: {
      if (kPrecMul < minp) {
        paren([&] { print_rec(f, id, 0, true, out); });
        return;
      }
      print_rec(f, n.kids[0], kPrecMul, allow_neg, out);
      out += n.kind == AstKind::Mul ? " * " : " / ";
      print_rec(f, n.kids[1], kPrecMul + 1, false, out);
      return;
    }
    case AstKind::Pow: {
      if (kPrecPow < minp) {
        paren([&] { print_rec(f, id, 0, true, out); });
        return;
      }
      print_rec(f, n.kids[0], kPrecAtom, false, out);
      out += '^';
      print_rec(f, n.kids[1], kPrecPow, false, out);
      return;
    }
  }
}

}  // namespace

ParsedFile parse_gates(const std::string& source) {
  return Parser(source).parse_file();
}

ParsedFile parse_expression(const std::string& source, AstId& root) {
  return Parser(source).parse_single_expression(root);
}

std::string ast_expr_str(const ParsedFile& file, AstId id) {
  std::string out;
  print_rec(file, id, 0, true, out);
  return out;
}

std::string ast_def_str(const ParsedFile& file, const GateDef& def) {
  std::string out = "utry " + def.name;
  if (!def.radices.empty()) {
    out += '<';
    for (size_t k = 0; k < def.radices.size(); ++k) {
      if (k) out += ", ";
      out += std::to_string(def.radices[k]);
    }
    out += '>';
  }
  out += '(';
  for (size_t k = 0; k < def.vars.size(); ++k) {
    if (k) out += ", ";
    out += def.vars[k];
  }
  out += ") {\n    ";
  print_rec(file, def.body, 0, true, out);
  out += "\n}\n";
  return out;
}

std::string ast_file_str(const ParsedFile& file) {
  std::string out;
  for (size_t k = 0; k < file.defs.size(); ++k) {
    if (k) out += '\n';
    out += ast_def_str(file, file.defs[k]);
  }
  return out;
}

}  // namespace qgl
