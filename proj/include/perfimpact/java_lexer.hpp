#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace perfimpact {

enum class TokenType {
  Identifier,
  Keyword,
  IntegerLiteral,
  FloatLiteral,
  StringLiteral,  // includes text blocks
  CharLiteral,
  BooleanLiteral,
  NullLiteral,
  Operator,
  Separator,
};

struct Token {
  TokenType type;
  std::string_view text;  // view into the lexed source
  std::size_t begin;
  std::size_t end;

  bool is(TokenType t, std::string_view s) const { return type == t && text == s; }
  bool is_op(std::string_view s) const { return type == TokenType::Operator && text == s; }
  bool is_sep(std::string_view s) const { return type == TokenType::Separator && text == s; }
  bool is_keyword(std::string_view s) const { return type == TokenType::Keyword && text == s; }
};

enum class LexMode {
  Strict,    // unterminated literals and comments raise ParseError
  Tolerant,  // unterminated constructs run to the end of line / input
};

// Comments and whitespace are dropped. Views stay valid as long as `source`.
std::vector<Token> lex_java(std::string_view source, LexMode mode = LexMode::Strict);

// The 50 reserved words of Java SE 8.
const std::vector<std::string_view>& java_keywords();
bool is_java_keyword(std::string_view word);

// 1-based line and column (in characters) of a byte offset.
class LineIndex {
 public:
  explicit LineIndex(std::string_view source);
  std::size_t line(std::size_t offset) const;
  std::size_t column(std::size_t offset) const;

 private:
  std::string_view source_;
  std::vector<std::size_t> line_starts_;
};

}  // namespace perfimpact
