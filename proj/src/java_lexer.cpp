#include "perfimpact/java_lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "perfimpact/ast.hpp"
#include "perfimpact/errors.hpp"

namespace perfimpact {

namespace {

// Longest first so that maximal munch falls out of a linear scan.
constexpr std::array<std::string_view, 38> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&",
    "||",   "==",  "!=",  "<=",  ">=",  "+=", "-=", "*=", "/=", "&=",
    "|=",   "^=",  "%=",  "<<",  ">>",  "=",  ">",  "<",  "!",  "~",
    "?",    ":",   "+",   "-",   "*",   "/",  "&",  "|",
};
constexpr std::array<std::string_view, 2> kTrailingOperators = {"^", "%"};

bool is_ident_start(unsigned char c) {
  return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80;
}

bool is_ident_part(unsigned char c) { return is_ident_start(c) || std::isdigit(c); }

class Lexer {
 public:
  Lexer(std::string_view src, LexMode mode) : src_(src), mode_(mode), lines_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_trivia();
      if (pos_ >= src_.size()) break;
      out.push_back(next());
    }
    return out;
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  [[noreturn]] void fail(const char* what, std::size_t at) const {
    throw ParseError(what, lines_.line(at), lines_.column(at));
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
        ++pos_;
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '/' && peek(1) == '*') {
        std::size_t close = src_.find("*/", pos_ + 2);
        if (close == std::string_view::npos) {
          if (mode_ == LexMode::Strict) fail("unterminated comment", pos_);
          pos_ = src_.size();
        } else {
          pos_ = close + 2;
        }
      } else {
        break;
      }
    }
  }

  Token make(TokenType type, std::size_t begin) const {
    return Token{type, src_.substr(begin, pos_ - begin), begin, pos_};
  }

  Token next() {
    std::size_t begin = pos_;
    auto c = static_cast<unsigned char>(src_[pos_]);

    if (is_ident_start(c)) {
      while (pos_ < src_.size() && is_ident_part(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      std::string_view word = src_.substr(begin, pos_ - begin);
      if (word == "true" || word == "false") return make(TokenType::BooleanLiteral, begin);
      if (word == "null") return make(TokenType::NullLiteral, begin);
      return make(is_java_keyword(word) ? TokenType::Keyword : TokenType::Identifier, begin);
    }
    if (std::isdigit(c) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      return number(begin);
    }
    if (c == '"') return string_literal(begin);
    if (c == '\'') return char_literal(begin);
    if (c == '.' && peek(1) == '.' && peek(2) == '.') {
      pos_ += 3;
      return make(TokenType::Operator, begin);
    }
    if (c == '(' || c == ')' || c == '{' || c == '}' || c == '[' || c == ']' || c == ';' ||
        c == ',' || c == '.' || c == '@') {
      ++pos_;
      return make(TokenType::Separator, begin);
    }
    std::string_view rest = src_.substr(pos_);
    for (std::string_view op : kOperators) {
      if (rest.starts_with(op)) {
        pos_ += op.size();
        return make(TokenType::Operator, begin);
      }
    }
    for (std::string_view op : kTrailingOperators) {
      if (rest.starts_with(op)) {
        pos_ += op.size();
        return make(TokenType::Operator, begin);
      }
    }
    if (mode_ == LexMode::Strict) fail("unexpected character", begin);
    // Tolerant mode: swallow one UTF-8 sequence as an operator-like token.
    ++pos_;
    while (pos_ < src_.size() && (static_cast<unsigned char>(src_[pos_]) & 0xC0) == 0x80) ++pos_;
    return make(TokenType::Operator, begin);
  }

  Token number(std::size_t begin) {
    bool is_float = false;
    auto digits = [&](auto pred) {
      while (pos_ < src_.size() && (pred(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
    };
    auto dec = [](unsigned char ch) { return std::isdigit(ch) != 0; };
    auto hex = [](unsigned char ch) { return std::isxdigit(ch) != 0; };

    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
      pos_ += 2;
      digits(hex);
      if (peek() == '.') {
        is_float = true;
        ++pos_;
        digits(hex);
      }
      if (peek() == 'p' || peek() == 'P') {
        is_float = true;
        ++pos_;
        if (peek() == '+' || peek() == '-') ++pos_;
        digits(dec);
      }
    } else if (peek() == '0' && (peek(1) == 'b' || peek(1) == 'B')) {
      pos_ += 2;
      digits([](unsigned char ch) { return ch == '0' || ch == '1'; });
    } else {
      digits(dec);
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        is_float = true;
        ++pos_;
        digits(dec);
      } else if (peek() == '.' && !is_ident_start(static_cast<unsigned char>(peek(1))) &&
                 peek(1) != '.') {
        // "1." is a double literal; "1.foo" never occurs in valid Java.
        is_float = true;
        ++pos_;
      }
      if (peek() == 'e' || peek() == 'E') {
        is_float = true;
        ++pos_;
        if (peek() == '+' || peek() == '-') ++pos_;
        digits(dec);
      }
    }
    char suffix = peek();
    if (suffix == 'f' || suffix == 'F' || suffix == 'd' || suffix == 'D') {
      is_float = true;
      ++pos_;
    } else if (suffix == 'l' || suffix == 'L') {
      ++pos_;
    }
    return make(is_float ? TokenType::FloatLiteral : TokenType::IntegerLiteral, begin);
  }

  Token string_literal(std::size_t begin) {
    if (src_.substr(pos_).starts_with("\"\"\"")) {
      std::size_t search = pos_ + 3;
      while (true) {
        std::size_t close = src_.find("\"\"\"", search);
        if (close == std::string_view::npos) {
          if (mode_ == LexMode::Strict) fail("unterminated text block", begin);
          pos_ = src_.size();
          return make(TokenType::StringLiteral, begin);
        }
        // An escaped quote cannot close the block.
        std::size_t backslashes = 0;
        for (std::size_t i = close; i > begin && src_[i - 1] == '\\'; --i) ++backslashes;
        if (backslashes % 2 == 0) {
          pos_ = close + 3;
          return make(TokenType::StringLiteral, begin);
        }
        search = close + 1;
      }
    }
    quoted('"', begin, "unterminated string literal");
    return make(TokenType::StringLiteral, begin);
  }

  Token char_literal(std::size_t begin) {
    quoted('\'', begin, "unterminated character literal");
    return make(TokenType::CharLiteral, begin);
  }

  void quoted(char quote, std::size_t begin, const char* what) {
    ++pos_;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\\') {
        pos_ += 2;
        continue;
      }
      if (c == quote) {
        ++pos_;
        return;
      }
      if (c == '\n') break;
      ++pos_;
    }
    if (mode_ == LexMode::Strict) fail(what, begin);
    pos_ = std::min(pos_, src_.size());
  }

  std::string_view src_;
  LexMode mode_;
  LineIndex lines_;
  std::size_t pos_ = 0;
};

}  // namespace

const std::vector<std::string_view>& java_keywords() {
  static const std::vector<std::string_view> words = {
      "abstract",   "assert",       "boolean",   "break",      "byte",      "case",
      "catch",      "char",         "class",     "const",      "continue",  "default",
      "do",         "double",       "else",      "enum",       "extends",   "final",
      "finally",    "float",        "for",       "goto",       "if",        "implements",
      "import",     "instanceof",   "int",       "interface",  "long",      "native",
      "new",        "package",      "private",   "protected",  "public",    "return",
      "short",      "static",       "strictfp",  "super",      "switch",    "synchronized",
      "this",       "throw",        "throws",    "transient",  "try",       "void",
      "volatile",   "while",
  };
  return words;
}

bool is_java_keyword(std::string_view word) {
  const auto& words = java_keywords();
  return std::find(words.begin(), words.end(), word) != words.end();
}

std::vector<Token> lex_java(std::string_view source, LexMode mode) {
  return Lexer(source, mode).run();
}

LineIndex::LineIndex(std::string_view source) : source_(source) {
  line_starts_.push_back(0);
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i] == '\n') line_starts_.push_back(i + 1);
  }
}

std::size_t LineIndex::line(std::size_t offset) const {
  auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
  return static_cast<std::size_t>(it - line_starts_.begin());
}

std::size_t LineIndex::column(std::size_t offset) const {
  std::size_t start = line_starts_[line(offset) - 1];
  offset = std::min(offset, source_.size());
  return utf8_length(source_.substr(start, offset - start)) + 1;
}

}  // namespace perfimpact
