#include "perfimpact/java_parser.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <utility>

#include "perfimpact/errors.hpp"
#include "perfimpact/java_lexer.hpp"

namespace perfimpact {

namespace {

// Raised inside a construct that does not fit the subset grammar; the
// nearest statement or member boundary turns it into an Unknown node.
struct SyntaxFault {};

constexpr std::array<std::string_view, 9> kPrimitiveTypes = {
    "boolean", "byte", "char", "short", "int", "long", "float", "double", "void"};

constexpr std::array<std::string_view, 11> kModifierKeywords = {
    "public",   "protected",    "private",   "static",   "abstract", "final",
    "native",   "synchronized", "transient", "volatile", "strictfp"};

constexpr std::array<std::string_view, 12> kAssignmentOps = {
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="};

constexpr std::size_t kMaxNesting = 1500;

template <std::size_t N>
bool one_of(std::string_view s, const std::array<std::string_view, N>& set) {
  return std::find(set.begin(), set.end(), s) != set.end();
}

int binary_precedence(const Token& t) {
  if (t.type == TokenType::Keyword) return t.text == "instanceof" ? 7 : 0;
  if (t.type != TokenType::Operator) return 0;
  std::string_view s = t.text;
  if (s == "||") return 1;
  if (s == "&&") return 2;
  if (s == "|") return 3;
  if (s == "^") return 4;
  if (s == "&") return 5;
  if (s == "==" || s == "!=") return 6;
  if (s == "<" || s == ">" || s == "<=" || s == ">=") return 7;
  if (s == "<<" || s == ">>" || s == ">>>") return 8;
  if (s == "+" || s == "-") return 9;
  if (s == "*" || s == "/" || s == "%") return 10;
  return 0;
}

std::string literal_type(const Token& t) {
  switch (t.type) {
    case TokenType::IntegerLiteral:
      return (t.text.back() == 'l' || t.text.back() == 'L') ? "long" : "int";
    case TokenType::FloatLiteral: {
      char last = t.text.back();
      return (last == 'f' || last == 'F') ? "float" : "double";
    }
    case TokenType::StringLiteral: return "string";
    case TokenType::CharLiteral: return "char";
    case TokenType::BooleanLiteral: return "boolean";
    default: return "null";
  }
}

bool is_literal(const Token& t) {
  switch (t.type) {
    case TokenType::IntegerLiteral:
    case TokenType::FloatLiteral:
    case TokenType::StringLiteral:
    case TokenType::CharLiteral:
    case TokenType::BooleanLiteral:
    case TokenType::NullLiteral:
      return true;
    default:
      return false;
  }
}

struct Modifiers {
  std::string words;
  std::vector<AstNode> annotations;
  std::size_t begin = 0;
  bool any = false;
};

class Parser {
 public:
  Parser(std::string_view source, std::vector<Token> tokens)
      : src_(source), toks_(std::move(tokens)), lines_(source) {}

  AstNode compilation_unit() {
    check_balance();
    AstNode unit;
    unit.kind = NodeKind::CompilationUnit;
    unit.span = {0, src_.size()};
    while (!at_end()) {
      if (at_sep(";")) {
        advance();
      } else if (at_kw("package")) {
        unit.attributes["package"] = package_declaration();
      } else if (at_kw("import")) {
        unit.children.push_back(import_declaration());
      } else {
        unit.children.push_back(top_level_type());
      }
    }
    return unit;
  }

 private:
  // ---- token cursor -------------------------------------------------------

  bool at_end() const { return pos_ >= toks_.size(); }
  const Token* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead] : nullptr;
  }
  bool at_sep(std::string_view s, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->is_sep(s);
  }
  bool at_op(std::string_view s, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->is_op(s);
  }
  bool at_kw(std::string_view s, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->is_keyword(s);
  }
  bool at_ident(std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->type == TokenType::Identifier;
  }
  bool at_ident(std::string_view s, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->is(TokenType::Identifier, s);
  }

  const Token& advance() {
    if (at_end()) throw SyntaxFault{};
    return toks_[pos_++];
  }
  const Token& expect_sep(std::string_view s) {
    if (!at_sep(s)) throw SyntaxFault{};
    return advance();
  }
  const Token& expect_op(std::string_view s) {
    if (!at_op(s)) throw SyntaxFault{};
    return advance();
  }
  const Token& expect_ident() {
    if (!at_ident()) throw SyntaxFault{};
    return advance();
  }

  std::size_t here() const {
    if (at_end()) throw SyntaxFault{};
    return toks_[pos_].begin;
  }
  std::size_t prev_end() const { return pos_ == 0 ? 0 : toks_[pos_ - 1].end; }
  std::string text(std::size_t begin, std::size_t end) const {
    return std::string(src_.substr(begin, end - begin));
  }

  static AstNode make(NodeKind kind, std::size_t begin) {
    AstNode n;
    n.kind = kind;
    n.span.begin = begin;
    return n;
  }
  // Closes the node's span at the last consumed token and moves it out.
  AstNode finish(AstNode& n) const {
    n.span.end = prev_end();
    return std::move(n);
  }
  AstNode unknown(std::string construct, std::size_t begin) const {
    AstNode n = make(NodeKind::Unknown, begin);
    n.attributes["construct"] = std::move(construct);
    n.span.end = prev_end();
    return n;
  }

  [[noreturn]] void error(const std::string& what, std::size_t offset) const {
    throw ParseError(what, lines_.line(offset), lines_.column(offset));
  }

  class NestingGuard {
   public:
    explicit NestingGuard(std::size_t& depth) : depth_(depth) {
      if (++depth_ > kMaxNesting) {
        --depth_;
        throw SyntaxFault{};
      }
    }
    ~NestingGuard() { --depth_; }
    NestingGuard(const NestingGuard&) = delete;
    NestingGuard& operator=(const NestingGuard&) = delete;

   private:
    std::size_t& depth_;
  };

  // ---- bracket structure --------------------------------------------------

  static char closer_for(char open) {
    return open == '(' ? ')' : open == '[' ? ']' : '}';
  }

  void check_balance() const {
    std::vector<const Token*> stack;
    for (const Token& t : toks_) {
      if (t.type != TokenType::Separator) continue;
      char c = t.text[0];
      if (c == '(' || c == '[' || c == '{') {
        stack.push_back(&t);
      } else if (c == ')' || c == ']' || c == '}') {
        if (stack.empty() || closer_for(stack.back()->text[0]) != c) {
          error(std::string("unbalanced '") + c + "'", t.begin);
        }
        stack.pop_back();
      }
    }
    if (!stack.empty()) {
      error(std::string("unclosed '") + stack.back()->text[0] + "'", stack.back()->begin);
    }
  }

  static bool is_open(const Token& t) {
    return t.type == TokenType::Separator && (t.text == "(" || t.text == "[" || t.text == "{");
  }
  static bool is_close(const Token& t) {
    return t.type == TokenType::Separator && (t.text == ")" || t.text == "]" || t.text == "}");
  }

  // Consumes a bracketed group starting at the current opening token.
  void skip_group() {
    if (at_end() || !is_open(*peek())) throw SyntaxFault{};
    int depth = 0;
    do {
      const Token& t = advance();
      if (is_open(t)) ++depth;
      if (is_close(t)) --depth;
    } while (depth > 0);
  }

  std::size_t matching_close(std::size_t open_index) const {
    int depth = 0;
    for (std::size_t i = open_index; i < toks_.size(); ++i) {
      if (is_open(toks_[i])) ++depth;
      if (is_close(toks_[i]) && --depth == 0) return i;
    }
    return toks_.size();
  }

  // ---- names and types ----------------------------------------------------

  std::string qualified_name() {
    std::size_t begin = here();
    expect_ident();
    while (at_sep(".") && at_ident(1)) {
      advance();
      advance();
    }
    return text(begin, prev_end());
  }

  // Skips "<...>" type arguments or parameters; false when the tokens do
  // not form a type-argument list.
  bool skip_type_arguments() {
    if (!at_op("<")) return false;
    std::size_t start = pos_;
    int depth = 0;
    while (!at_end()) {
      const Token& t = *peek();
      if (t.is_op("<")) {
        ++depth;
      } else if (t.is_op(">")) {
        --depth;
      } else if (t.is_op(">>")) {
        depth -= 2;
      } else if (t.is_op(">>>")) {
        depth -= 3;
      } else if (!(t.type == TokenType::Identifier || t.is_op("?") || t.is_op("&") ||
                   t.is_sep(".") || t.is_sep(",") || t.is_sep("[") || t.is_sep("]") ||
                   t.is_sep("@") || t.is_keyword("extends") || t.is_keyword("super") ||
                   (t.type == TokenType::Keyword && one_of(t.text, kPrimitiveTypes)))) {
        pos_ = start;
        return false;
      }
      advance();
      if (depth <= 0) return true;
    }
    pos_ = start;
    return false;
  }

  // Parses a type when one is present; otherwise restores the cursor.
  std::optional<std::string> try_type() {
    if (at_end()) return std::nullopt;
    std::size_t start = pos_;
    std::size_t begin = peek()->begin;
    const Token& first = *peek();
    if (first.type == TokenType::Keyword && one_of(first.text, kPrimitiveTypes)) {
      advance();
    } else if (first.type == TokenType::Identifier) {
      advance();
      if (at_op("<") && !skip_type_arguments()) {
        pos_ = start;
        return std::nullopt;
      }
      while (at_sep(".") && at_ident(1)) {
        advance();
        advance();
        if (at_op("<") && !skip_type_arguments()) {
          pos_ = start;
          return std::nullopt;
        }
      }
    } else {
      return std::nullopt;
    }
    while (at_sep("[") && at_sep("]", 1)) {
      advance();
      advance();
    }
    return text(begin, prev_end());
  }

  std::string expect_type() {
    auto t = try_type();
    if (!t) throw SyntaxFault{};
    return *t;
  }

  // ---- modifiers and annotations -----------------------------------------

  AstNode annotation() {
    std::size_t begin = here();
    expect_sep("@");
    std::string name = qualified_name();
    if (at_sep("(")) skip_group();
    AstNode n = unknown("annotation", begin);
    n.attributes["name"] = name;
    return n;
  }

  bool at_modifier() const {
    const Token* t = peek();
    if (!t) return false;
    if (t->type == TokenType::Keyword && one_of(t->text, kModifierKeywords)) {
      return !(t->text == "synchronized" && at_sep("(", 1));
    }
    if (t->is_keyword("default")) {
      return !(at_op(":", 1) || at_op("->", 1));
    }
    if (t->is(TokenType::Identifier, "sealed")) {
      const Token* next = peek(1);
      return next && (next->type == TokenType::Keyword || next->is(TokenType::Identifier, "record"));
    }
    return false;
  }

  Modifiers modifiers() {
    Modifiers m;
    m.begin = at_end() ? prev_end() : peek()->begin;
    while (!at_end()) {
      if (at_sep("@") && !at_kw("interface", 1)) {
        m.annotations.push_back(annotation());
      } else if (at_modifier()) {
        if (!m.words.empty()) m.words += ' ';
        m.words += advance().text;
      } else {
        break;
      }
      m.any = true;
    }
    return m;
  }

  static void apply(AstNode& n, Modifiers& m) {
    if (!m.words.empty()) n.attributes["modifiers"] = m.words;
    for (auto& a : m.annotations) n.children.push_back(std::move(a));
    m.annotations.clear();
  }

  // ---- top level ----------------------------------------------------------

  std::string package_declaration() {
    advance();
    std::string name = qualified_name();
    expect_sep(";");
    return name;
  }

  AstNode import_declaration() {
    std::size_t start = pos_;
    std::size_t begin = here();
    try {
      advance();
      AstNode n = make(NodeKind::ImportDeclaration, begin);
      if (at_kw("static")) {
        advance();
        n.attributes["static"] = "true";
      }
      std::string name = qualified_name();
      if (at_sep(".") && at_op("*", 1)) {
        advance();
        advance();
        name += ".*";
      }
      expect_sep(";");
      n.attributes["name"] = name;
      return finish(n);
    } catch (const SyntaxFault&) {
      pos_ = start;
      error("malformed import declaration", begin);
    }
  }

  bool at_type_declaration() const {
    return at_kw("class") || at_kw("interface") || at_kw("enum") ||
           (at_sep("@") && at_kw("interface", 1)) ||
           (at_ident("record") && at_ident(1) && (at_sep("(", 2) || at_op("<", 2)));
  }

  AstNode top_level_type() {
    std::size_t start = pos_;
    std::size_t begin = here();
    try {
      Modifiers mods = modifiers();
      if ((at_ident("module") || at_ident("open")) && !at_type_declaration()) {
        return skip_to_body("module", start, begin);
      }
      if (!at_type_declaration()) {
        error("expected a type declaration", at_end() ? prev_end() : peek()->begin);
      }
      return type_declaration(mods);
    } catch (const SyntaxFault&) {
      return skip_to_body("unparsed", start, begin);
    }
  }

  // Recovery for a top-level declaration: everything up to and including the
  // first balanced body becomes one Unknown node.
  AstNode skip_to_body(std::string construct, std::size_t start, std::size_t begin) {
    pos_ = start;
    while (!at_end() && !at_sep("{")) {
      if (at_sep(";") || is_close(*peek())) error("expected a type declaration", peek()->begin);
      advance();
    }
    if (at_end()) error("expected a type declaration body", begin);
    skip_group();
    return unknown(std::move(construct), begin);
  }

  // ---- type declarations --------------------------------------------------

  AstNode type_declaration(Modifiers& mods) {
    NestingGuard guard(nesting_);
    std::size_t begin = mods.any ? mods.begin : here();
    if (at_sep("@")) {
      advance();
      advance();  // interface
      expect_ident();
      if (!at_sep("{")) throw SyntaxFault{};
      skip_group();
      AstNode n = unknown("annotation_type", begin);
      apply(n, mods);
      return n;
    }
    std::string kind(advance().text);
    AstNode n = make(NodeKind::ClassDeclaration, begin);
    n.attributes["kind"] = kind;
    apply(n, mods);
    std::string name(expect_ident().text);
    n.attributes["name"] = name;
    if (at_op("<")) {
      std::size_t tp = here();
      if (!skip_type_arguments()) throw SyntaxFault{};
      n.attributes["type_parameters"] = text(tp, prev_end());
    }
    if (kind == "record") {
      for (auto& p : parameters()) n.children.push_back(std::move(p));
    }
    while (!at_sep("{")) {
      std::string clause;
      if (at_kw("extends")) {
        clause = "extends";
      } else if (at_kw("implements")) {
        clause = "implements";
      } else if (at_ident("permits")) {
        clause = "permits";
      } else {
        throw SyntaxFault{};
      }
      advance();
      std::size_t list_begin = here();
      expect_type();
      while (at_sep(",")) {
        advance();
        expect_type();
      }
      n.attributes[clause] = text(list_begin, prev_end());
    }
    class_body(n, kind == "enum", name);
    return finish(n);
  }

  void class_body(AstNode& owner, bool is_enum, const std::string& class_name) {
    expect_sep("{");
    if (is_enum) enum_constants(owner);
    while (!at_sep("}")) {
      if (at_end()) throw SyntaxFault{};
      if (auto m = member_safely(class_name)) owner.children.push_back(std::move(*m));
    }
    advance();
  }

  void enum_constants(AstNode& owner) {
    while (!at_sep("}")) {
      if (at_sep(";")) {
        advance();
        return;
      }
      Modifiers mods = modifiers();
      std::size_t begin = mods.any ? mods.begin : here();
      AstNode c = make(NodeKind::VariableDeclarator, begin);
      apply(c, mods);
      c.attributes["name"] = std::string(expect_ident().text);
      c.attributes["kind"] = "enum_constant";
      if (at_sep("(")) {
        for (auto& a : arguments()) c.children.push_back(std::move(a));
      }
      if (at_sep("{")) class_body(c, false, "");
      owner.children.push_back(finish(c));
      if (at_sep(",")) {
        advance();
      } else if (!at_sep(";") && !at_sep("}")) {
        throw SyntaxFault{};
      }
    }
  }

  std::optional<AstNode> member_safely(const std::string& class_name) {
    std::size_t start = pos_;
    try {
      return member(class_name);
    } catch (const SyntaxFault&) {
      pos_ = start;
      return recover(start);
    }
  }

  std::optional<AstNode> member(const std::string& class_name) {
    if (at_sep(";")) {
      advance();
      return std::nullopt;
    }
    Modifiers mods = modifiers();
    std::size_t begin = mods.any ? mods.begin : here();
    if (at_type_declaration()) return type_declaration(mods);
    if (at_sep("{")) {
      AstNode block = block_statement();
      block.span.begin = begin;
      block.attributes["initializer"] =
          mods.words.find("static") != std::string::npos ? "static" : "instance";
      apply(block, mods);
      return block;
    }
    std::string type_parameters;
    if (at_op("<")) {
      std::size_t tp = here();
      if (!skip_type_arguments()) throw SyntaxFault{};
      type_parameters = text(tp, prev_end());
    }
    if (at_ident() && (at_sep("(", 1) || (at_sep("{", 1) && peek()->text == class_name))) {
      AstNode ctor = make(NodeKind::MethodDeclaration, begin);
      ctor.attributes["name"] = std::string(advance().text);
      ctor.attributes["constructor"] = at_sep("{") ? "compact" : "true";
      if (!type_parameters.empty()) ctor.attributes["type_parameters"] = type_parameters;
      apply(ctor, mods);
      method_rest(ctor);
      return finish(ctor);
    }
    std::string type = expect_type();
    if (!at_ident()) throw SyntaxFault{};
    if (at_sep("(", 1)) {
      AstNode method = make(NodeKind::MethodDeclaration, begin);
      method.attributes["name"] = std::string(advance().text);
      method.attributes["type"] = type;
      if (!type_parameters.empty()) method.attributes["type_parameters"] = type_parameters;
      apply(method, mods);
      method_rest(method);
      return finish(method);
    }
    if (!type_parameters.empty()) throw SyntaxFault{};
    AstNode field = make(NodeKind::VariableDeclaration, begin);
    field.attributes["type"] = type;
    apply(field, mods);
    declarators(field);
    expect_sep(";");
    return finish(field);
  }

  // Parameters, throws clause and body of a method or constructor.
  void method_rest(AstNode& method) {
    if (at_sep("(")) {
      for (auto& p : parameters()) method.children.push_back(std::move(p));
    }
    while (at_sep("[") && at_sep("]", 1)) {
      advance();
      advance();
    }
    if (at_kw("throws")) {
      advance();
      std::size_t list_begin = here();
      expect_type();
      while (at_sep(",")) {
        advance();
        expect_type();
      }
      method.attributes["throws"] = text(list_begin, prev_end());
    }
    if (at_kw("default")) {
      // Annotation member default value.
      advance();
      while (!at_sep(";")) {
        if (at_end()) throw SyntaxFault{};
        if (is_open(*peek())) {
          skip_group();
        } else {
          advance();
        }
      }
    }
    if (at_sep(";")) {
      advance();
      return;
    }
    method.children.push_back(block_statement());
  }

  std::vector<AstNode> parameters() {
    std::vector<AstNode> out;
    expect_sep("(");
    while (!at_sep(")")) {
      Modifiers mods = modifiers();
      std::size_t begin = mods.any ? mods.begin : here();
      AstNode param = make(NodeKind::VariableDeclaration, begin);
      std::string type = expect_type();
      if (at_op("...")) {
        advance();
        type += "...";
      }
      param.attributes["type"] = type;
      apply(param, mods);
      std::size_t name_begin = here();
      AstNode declarator = make(NodeKind::VariableDeclarator, name_begin);
      if (at_kw("this")) {
        advance();
        declarator.attributes["name"] = "this";
      } else {
        declarator.attributes["name"] = std::string(expect_ident().text);
      }
      while (at_sep("[") && at_sep("]", 1)) {
        advance();
        advance();
      }
      param.children.push_back(finish(declarator));
      out.push_back(finish(param));
      if (!at_sep(",")) break;
      advance();
    }
    expect_sep(")");
    return out;
  }

  // name [dims] [= init] {, name [dims] [= init]}
  void declarators(AstNode& declaration) {
    while (true) {
      std::size_t begin = here();
      AstNode d = make(NodeKind::VariableDeclarator, begin);
      d.attributes["name"] = std::string(expect_ident().text);
      while (at_sep("[") && at_sep("]", 1)) {
        advance();
        advance();
      }
      if (at_op("=")) {
        advance();
        d.children.push_back(at_sep("{") ? array_initializer() : expression());
      }
      declaration.children.push_back(finish(d));
      if (!at_sep(",")) return;
      advance();
    }
  }

  // ---- statements ---------------------------------------------------------

  AstNode block_statement() {
    NestingGuard guard(nesting_);
    AstNode block = make(NodeKind::BlockStatement, here());
    expect_sep("{");
    while (!at_sep("}")) {
      if (at_end()) throw SyntaxFault{};
      if (auto s = statement_safely()) block.children.push_back(std::move(*s));
    }
    advance();
    return finish(block);
  }

  std::optional<AstNode> statement_safely() {
    std::size_t start = pos_;
    try {
      return statement();
    } catch (const SyntaxFault&) {
      pos_ = start;
      return recover(start);
    }
  }

  // Skips to the end of the current statement or member: a ';' or a closing
  // '}' at bracket depth 0. Never consumes the '}' of the enclosing block.
  AstNode recover(std::size_t start) {
    int depth = 0;
    while (!at_end()) {
      const Token& t = *peek();
      if (depth == 0 && t.is_sep("}")) break;
      advance();
      if (is_open(t)) ++depth;
      if (is_close(t)) depth = std::max(0, depth - 1);
      if (depth == 0 && (t.is_sep(";") || t.is_sep("}"))) break;
    }
    if (pos_ == start) advance();
    return unknown("unparsed", toks_[start].begin);
  }

  void push_statement(AstNode& parent) {
    if (auto s = statement_safely()) parent.children.push_back(std::move(*s));
  }

  std::optional<AstNode> statement() {
    NestingGuard guard(nesting_);
    if (at_end()) throw SyntaxFault{};
    const Token& t = *peek();
    std::size_t begin = t.begin;

    if (t.is_sep("{")) return block_statement();
    if (t.is_sep(";")) {
      advance();
      return std::nullopt;
    }
    if (t.type == TokenType::Keyword) {
      if (t.text == "if") return if_statement();
      if (t.text == "for") return for_statement();
      if (t.text == "while") return while_statement();
      if (t.text == "do") return do_statement();
      if (t.text == "switch") {
        AstNode s = switch_construct(false);
        if (at_sep(";")) advance();
        return s;
      }
      if (t.text == "return") {
        advance();
        AstNode r = make(NodeKind::ReturnStatement, begin);
        if (!at_sep(";")) r.children.push_back(expression());
        expect_sep(";");
        return finish(r);
      }
      if (t.text == "break" || t.text == "continue") {
        std::string construct(advance().text);
        if (at_ident()) advance();
        expect_sep(";");
        return unknown(construct, begin);
      }
      if (t.text == "throw") {
        advance();
        AstNode e = expression();
        expect_sep(";");
        AstNode n = unknown("throw", begin);
        n.children.push_back(std::move(e));
        return n;
      }
      if (t.text == "try") return try_statement();
      if (t.text == "synchronized" && at_sep("(", 1)) {
        advance();
        expect_sep("(");
        AstNode lock = expression();
        expect_sep(")");
        AstNode body = block_statement();
        AstNode n = unknown("synchronized", begin);
        n.children.push_back(std::move(lock));
        n.children.push_back(std::move(body));
        return n;
      }
      if (t.text == "assert") {
        advance();
        std::vector<AstNode> parts;
        parts.push_back(expression());
        if (at_op(":")) {
          advance();
          parts.push_back(expression());
        }
        expect_sep(";");
        AstNode n = unknown("assert", begin);
        n.children = std::move(parts);
        return n;
      }
    }
    if (t.type == TokenType::Identifier) {
      if (at_op(":", 1)) {
        std::string label(advance().text);
        advance();
        AstNode n = make(NodeKind::Unknown, begin);
        n.attributes["construct"] = "labeled";
        n.attributes["label"] = label;
        push_statement(n);
        return finish(n);
      }
      if (t.text == "yield" && !at_op("=", 1) && !at_sep(".", 1) && !at_sep("(", 1) &&
          !at_sep("[", 1) && !at_sep(";", 1) && !at_op("++", 1) && !at_op("--", 1)) {
        advance();
        AstNode e = expression();
        expect_sep(";");
        AstNode n = unknown("yield", begin);
        n.children.push_back(std::move(e));
        return n;
      }
    }

    std::size_t start = pos_;
    Modifiers mods = modifiers();
    if (at_type_declaration()) return type_declaration(mods);
    if (mods.any || looks_like_local_variable()) {
      AstNode decl = local_variable(mods);
      expect_sep(";");
      return finish(decl);
    }
    pos_ = start;
    AstNode e = expression();
    expect_sep(";");
    return e;
  }

  bool looks_like_local_variable() {
    std::size_t start = pos_;
    bool result = false;
    if (try_type() && at_ident()) {
      result = at_op("=", 1) || at_sep(";", 1) || at_sep(",", 1) || at_sep("[", 1) || at_op(":", 1);
    }
    pos_ = start;
    return result;
  }

  AstNode local_variable(Modifiers& mods) {
    std::size_t begin = mods.any ? mods.begin : here();
    AstNode decl = make(NodeKind::VariableDeclaration, begin);
    decl.attributes["type"] = expect_type();
    apply(decl, mods);
    declarators(decl);
    return finish(decl);
  }

  AstNode if_statement() {
    AstNode n = make(NodeKind::IfStatement, here());
    advance();
    expect_sep("(");
    n.children.push_back(expression());
    expect_sep(")");
    push_statement(n);
    if (at_kw("else")) {
      advance();
      push_statement(n);
    }
    return finish(n);
  }

  bool looks_like_for_each() {
    std::size_t start = pos_;
    modifiers();
    bool result = try_type() && at_ident() && at_op(":", 1);
    pos_ = start;
    return result;
  }

  AstNode for_statement() {
    std::size_t begin = here();
    advance();
    expect_sep("(");
    if (looks_like_for_each()) {
      AstNode n = make(NodeKind::ForEachStatement, begin);
      Modifiers mods = modifiers();
      AstNode var = make(NodeKind::VariableDeclaration, mods.any ? mods.begin : here());
      var.attributes["type"] = expect_type();
      apply(var, mods);
      AstNode declarator = make(NodeKind::VariableDeclarator, here());
      declarator.attributes["name"] = std::string(expect_ident().text);
      var.children.push_back(finish(declarator));
      n.children.push_back(finish(var));
      expect_op(":");
      n.children.push_back(expression());
      expect_sep(")");
      push_statement(n);
      return finish(n);
    }
    AstNode n = make(NodeKind::ForStatement, begin);
    if (!at_sep(";")) {
      std::size_t start = pos_;
      Modifiers mods = modifiers();
      if (mods.any || looks_like_local_variable()) {
        AstNode decl = local_variable(mods);
        n.children.push_back(finish(decl));
      } else {
        pos_ = start;
        expression_list(n);
      }
    }
    expect_sep(";");
    if (!at_sep(";")) n.children.push_back(expression());
    expect_sep(";");
    if (!at_sep(")")) expression_list(n);
    expect_sep(")");
    push_statement(n);
    return finish(n);
  }

  void expression_list(AstNode& parent) {
    parent.children.push_back(expression());
    while (at_sep(",")) {
      advance();
      parent.children.push_back(expression());
    }
  }

  AstNode while_statement() {
    AstNode n = make(NodeKind::WhileStatement, here());
    advance();
    expect_sep("(");
    n.children.push_back(expression());
    expect_sep(")");
    push_statement(n);
    return finish(n);
  }

  AstNode do_statement() {
    AstNode n = make(NodeKind::DoStatement, here());
    advance();
    push_statement(n);
    if (!at_kw("while")) throw SyntaxFault{};
    advance();
    expect_sep("(");
    n.children.push_back(expression());
    expect_sep(")");
    expect_sep(";");
    return finish(n);
  }

  AstNode try_statement() {
    std::size_t begin = here();
    advance();
    AstNode n = make(NodeKind::Unknown, begin);
    n.attributes["construct"] = "try";
    if (at_sep("(")) {
      advance();
      while (!at_sep(")")) {
        std::size_t start = pos_;
        Modifiers mods = modifiers();
        if (mods.any || looks_like_local_variable()) {
          AstNode decl = local_variable(mods);
          n.children.push_back(finish(decl));
        } else {
          pos_ = start;
          n.children.push_back(expression());
        }
        if (at_sep(";")) advance();
      }
      advance();
    }
    n.children.push_back(block_statement());
    while (at_kw("catch")) {
      advance();
      expect_sep("(");
      Modifiers mods = modifiers();
      AstNode param = make(NodeKind::VariableDeclaration, mods.any ? mods.begin : here());
      std::string type = expect_type();
      while (at_op("|")) {
        advance();
        type += " | " + expect_type();
      }
      param.attributes["type"] = type;
      apply(param, mods);
      AstNode declarator = make(NodeKind::VariableDeclarator, here());
      declarator.attributes["name"] = std::string(expect_ident().text);
      param.children.push_back(finish(declarator));
      n.children.push_back(finish(param));
      expect_sep(")");
      n.children.push_back(block_statement());
    }
    if (at_kw("finally")) {
      advance();
      n.children.push_back(block_statement());
    }
    return finish(n);
  }

  // Both the statement and the expression form. Children: selector, then for
  // each entry its label expressions followed by its body.
  AstNode switch_construct(bool as_expression) {
    AstNode n = make(NodeKind::SwitchStatement, here());
    n.attributes["form"] = as_expression ? "expression" : "statement";
    advance();
    expect_sep("(");
    n.children.push_back(expression());
    expect_sep(")");
    expect_sep("{");
    while (!at_sep("}")) {
      if (at_end()) throw SyntaxFault{};
      if (at_kw("case")) {
        advance();
        bool saved = no_lambda_;
        no_lambda_ = true;
        while (true) {
          if (at_kw("default")) {
            advance();
          } else {
            n.children.push_back(expression());
          }
          if (!at_sep(",")) break;
          advance();
        }
        no_lambda_ = saved;
      } else if (at_kw("default")) {
        advance();
      } else {
        throw SyntaxFault{};
      }
      if (at_op("->")) {
        advance();
        if (at_sep("{") || at_kw("throw")) {
          push_statement(n);
        } else {
          n.children.push_back(expression());
          expect_sep(";");
        }
      } else {
        expect_op(":");
        while (!at_sep("}") && !at_kw("case") && !at_kw("default")) {
          if (at_end()) throw SyntaxFault{};
          push_statement(n);
        }
      }
    }
    advance();
    return finish(n);
  }

  // ---- expressions --------------------------------------------------------

  AstNode expression() {
    NestingGuard guard(nesting_);
    std::size_t begin = here();
    AstNode lhs = conditional();
    if (!at_end() && peek()->type == TokenType::Operator && one_of(peek()->text, kAssignmentOps)) {
      std::string op(advance().text);
      AstNode rhs = expression();
      AstNode n = make(NodeKind::BinaryExpression, begin);
      n.attributes["operator"] = op;
      n.children.push_back(std::move(lhs));
      n.children.push_back(std::move(rhs));
      return finish(n);
    }
    return lhs;
  }

  AstNode conditional() {
    std::size_t begin = here();
    AstNode cond = binary(1);
    if (!at_op("?")) return cond;
    advance();
    AstNode n = make(NodeKind::ConditionalExpression, begin);
    n.children.push_back(std::move(cond));
    bool saved = no_lambda_;
    no_lambda_ = false;
    n.children.push_back(expression());
    no_lambda_ = saved;
    expect_op(":");
    n.children.push_back(lambda_ahead() ? lambda() : conditional());
    return finish(n);
  }

  AstNode binary(int min_precedence) {
    NestingGuard guard(nesting_);
    std::size_t begin = here();
    AstNode lhs = unary();
    while (!at_end()) {
      int precedence = binary_precedence(*peek());
      if (precedence == 0 || precedence < min_precedence) break;
      std::string op(advance().text);
      AstNode n = make(NodeKind::BinaryExpression, begin);
      n.attributes["operator"] = op;
      n.children.push_back(std::move(lhs));
      if (op == "instanceof") {
        if (at_kw("final")) advance();
        n.attributes["type"] = expect_type();
        if (at_ident()) n.attributes["binding"] = std::string(advance().text);
      } else {
        n.children.push_back(binary(precedence + 1));
      }
      lhs = finish(n);
    }
    return lhs;
  }

  AstNode unary() {
    NestingGuard guard(nesting_);
    std::size_t begin = here();
    const Token& t = *peek();
    if (t.type == TokenType::Operator &&
        (t.text == "++" || t.text == "--" || t.text == "+" || t.text == "-" || t.text == "!" ||
         t.text == "~")) {
      AstNode n = make(NodeKind::UnaryExpression, begin);
      n.attributes["operator"] = std::string(advance().text);
      n.attributes["position"] = "prefix";
      n.children.push_back(unary());
      return finish(n);
    }
    if (t.is_sep("(") && !lambda_ahead()) {
      if (auto cast = try_cast()) return std::move(*cast);
    }
    return postfix(primary(), begin);
  }

  bool starts_cast_operand() const {
    const Token* t = peek();
    if (!t) return false;
    if (t->type == TokenType::Identifier || is_literal(*t)) return true;
    if (t->is_sep("(") || t->is_op("!") || t->is_op("~")) return true;
    return t->is_keyword("this") || t->is_keyword("super") || t->is_keyword("new") ||
           t->is_keyword("switch") ||
           (t->type == TokenType::Keyword && one_of(t->text, kPrimitiveTypes));
  }

  std::optional<AstNode> try_cast() {
    std::size_t start = pos_;
    std::size_t begin = here();
    advance();
    bool primitive = !at_end() && peek()->type == TokenType::Keyword &&
                     one_of(peek()->text, kPrimitiveTypes);
    auto type = try_type();
    if (type) {
      while (at_op("&")) {
        advance();
        auto bound = try_type();
        if (!bound) {
          type.reset();
          break;
        }
        *type += " & " + *bound;
      }
    }
    if (type && at_sep(")")) {
      advance();
      if (primitive || starts_cast_operand()) {
        AstNode operand = unary();
        AstNode n = make(NodeKind::Unknown, begin);
        n.attributes["construct"] = "cast";
        n.attributes["type"] = *type;
        n.children.push_back(std::move(operand));
        return finish(n);
      }
    }
    pos_ = start;
    return std::nullopt;
  }

  bool lambda_ahead() const {
    if (no_lambda_ || at_end()) return false;
    if (at_ident() && at_op("->", 1)) return true;
    if (!at_sep("(")) return false;
    std::size_t close = matching_close(pos_);
    return close + 1 < toks_.size() && toks_[close + 1].is_op("->");
  }

  AstNode lambda() {
    std::size_t begin = here();
    if (at_ident()) {
      advance();
    } else {
      skip_group();
    }
    expect_op("->");
    if (at_sep("{")) {
      skip_group();
    } else {
      // Expression body: runs to the first delimiter at depth 0.
      int pending_conditionals = 0;
      std::size_t consumed = 0;
      while (!at_end()) {
        const Token& t = *peek();
        if (t.is_sep(",") || t.is_sep(";") || is_close(t)) break;
        if (t.is_op(":") && pending_conditionals == 0) break;
        if (t.is_op("?")) ++pending_conditionals;
        if (t.is_op(":")) --pending_conditionals;
        if (is_open(t)) {
          skip_group();
        } else {
          advance();
        }
        ++consumed;
      }
      if (consumed == 0) throw SyntaxFault{};
    }
    return unknown("lambda", begin);
  }

  std::vector<AstNode> arguments() {
    std::vector<AstNode> args;
    expect_sep("(");
    bool saved = no_lambda_;
    no_lambda_ = false;
    while (!at_sep(")")) {
      args.push_back(lambda_ahead() ? lambda() : expression());
      if (!at_sep(",")) break;
      advance();
    }
    no_lambda_ = saved;
    expect_sep(")");
    return args;
  }

  AstNode method_call(std::string name, std::size_t begin, std::optional<AstNode> scope) {
    AstNode call = make(NodeKind::MethodCall, begin);
    call.attributes["name"] = std::move(name);
    if (scope) call.children.push_back(std::move(*scope));
    for (auto& a : arguments()) call.children.push_back(std::move(a));
    return finish(call);
  }

  AstNode primary() {
    NestingGuard guard(nesting_);
    const Token& t = *peek();
    std::size_t begin = t.begin;

    if (is_literal(t)) {
      advance();
      AstNode n = make(NodeKind::Literal, begin);
      n.attributes["value"] = std::string(t.text);
      n.attributes["type"] = literal_type(t);
      return finish(n);
    }
    if (t.type == TokenType::Identifier) {
      if (lambda_ahead()) return lambda();
      advance();
      if (at_sep("(")) return method_call(std::string(t.text), begin, std::nullopt);
      AstNode n = make(NodeKind::Identifier, begin);
      n.attributes["name"] = std::string(t.text);
      return finish(n);
    }
    if (t.is_keyword("this") || t.is_keyword("super")) {
      advance();
      if (at_sep("(")) return method_call(std::string(t.text), begin, std::nullopt);
      AstNode n = make(NodeKind::Identifier, begin);
      n.attributes["name"] = std::string(t.text);
      return finish(n);
    }
    if (t.is_keyword("new")) return creation();
    if (t.is_keyword("switch")) return switch_construct(true);
    if (t.is_sep("(")) {
      if (lambda_ahead()) return lambda();
      advance();
      bool saved = no_lambda_;
      no_lambda_ = false;
      AstNode inner = expression();
      no_lambda_ = saved;
      expect_sep(")");
      return inner;
    }
    if (t.type == TokenType::Keyword && one_of(t.text, kPrimitiveTypes)) {
      expect_type();
      if (at_sep(".") && at_kw("class", 1)) {
        advance();
        advance();
        return unknown("class_literal", begin);
      }
      if (at_op("::")) {
        advance();
        advance();
        AstNode ref = make(NodeKind::MethodExpression, begin);
        ref.attributes["name"] = std::string(toks_[pos_ - 1].text);
        return finish(ref);
      }
      throw SyntaxFault{};
    }
    throw SyntaxFault{};
  }

  AstNode postfix(AstNode expr, std::size_t begin) {
    while (!at_end()) {
      if (at_sep(".")) {
        advance();
        if (at_op("<")) {
          if (!skip_type_arguments()) throw SyntaxFault{};
          std::string name(expect_ident().text);
          expr = method_call(std::move(name), begin, std::move(expr));
        } else if (at_ident()) {
          const Token& name = advance();
          if (at_sep("(")) {
            expr = method_call(std::string(name.text), begin, std::move(expr));
          } else if (expr.kind == NodeKind::Identifier) {
            expr.attributes["name"] += "." + std::string(name.text);
            expr.span.end = prev_end();
          } else {
            AstNode access = make(NodeKind::Unknown, begin);
            access.attributes["construct"] = "field_access";
            access.attributes["name"] = std::string(name.text);
            access.children.push_back(std::move(expr));
            expr = finish(access);
          }
        } else if (at_kw("this") || at_kw("super")) {
          const Token& kw = advance();
          if (at_sep("(")) {
            expr = method_call(std::string(kw.text), begin, std::move(expr));
          } else if (expr.kind == NodeKind::Identifier) {
            expr.attributes["name"] += "." + std::string(kw.text);
            expr.span.end = prev_end();
          } else {
            throw SyntaxFault{};
          }
        } else if (at_kw("class")) {
          advance();
          AstNode lit = make(NodeKind::Unknown, begin);
          lit.attributes["construct"] = "class_literal";
          lit.children.push_back(std::move(expr));
          expr = finish(lit);
        } else if (at_kw("new")) {
          AstNode inner = creation();
          inner.span.begin = begin;
          inner.children.insert(inner.children.begin(), std::move(expr));
          expr = std::move(inner);
        } else {
          throw SyntaxFault{};
        }
      } else if (at_sep("[")) {
        if (at_sep("]", 1)) {
          // Type[].class or Type[]::new
          while (at_sep("[") && at_sep("]", 1)) {
            advance();
            advance();
          }
          if (at_sep(".") && at_kw("class", 1)) {
            advance();
            advance();
            AstNode lit = make(NodeKind::Unknown, begin);
            lit.attributes["construct"] = "class_literal";
            lit.children.push_back(std::move(expr));
            expr = finish(lit);
          } else if (!at_op("::")) {
            throw SyntaxFault{};
          }
          continue;
        }
        advance();
        AstNode index = expression();
        expect_sep("]");
        AstNode access = make(NodeKind::Unknown, begin);
        access.attributes["construct"] = "array_access";
        access.children.push_back(std::move(expr));
        access.children.push_back(std::move(index));
        expr = finish(access);
      } else if (at_op("++") || at_op("--")) {
        AstNode n = make(NodeKind::UnaryExpression, begin);
        n.attributes["operator"] = std::string(advance().text);
        n.attributes["position"] = "postfix";
        n.children.push_back(std::move(expr));
        expr = finish(n);
      } else if (at_op("::")) {
        advance();
        if (at_op("<") && !skip_type_arguments()) throw SyntaxFault{};
        AstNode ref = make(NodeKind::MethodExpression, begin);
        if (at_kw("new")) {
          advance();
          ref.attributes["name"] = "new";
        } else {
          ref.attributes["name"] = std::string(expect_ident().text);
        }
        ref.children.push_back(std::move(expr));
        expr = finish(ref);
      } else {
        break;
      }
    }
    return expr;
  }

  AstNode array_initializer() {
    NestingGuard guard(nesting_);
    AstNode n = make(NodeKind::Unknown, here());
    n.attributes["construct"] = "array_init";
    expect_sep("{");
    while (!at_sep("}")) {
      n.children.push_back(at_sep("{") ? array_initializer() : expression());
      if (!at_sep(",")) break;
      advance();
    }
    expect_sep("}");
    return finish(n);
  }

  AstNode creation() {
    std::size_t begin = here();
    advance();  // new
    if (at_op("<") && !skip_type_arguments()) throw SyntaxFault{};
    AstNode n = make(NodeKind::Unknown, begin);
    n.attributes["construct"] = "new";
    while (at_sep("@")) annotation();
    n.attributes["type"] = expect_type();
    if (n.attributes["type"].ends_with("]")) n.attributes["construct"] = "new_array";
    if (at_sep("[")) {
      n.attributes["construct"] = "new_array";
      while (at_sep("[")) {
        advance();
        if (!at_sep("]")) n.children.push_back(expression());
        expect_sep("]");
      }
    }
    if (at_sep("{")) {
      n.children.push_back(array_initializer());
    } else if (n.attributes["construct"] == "new") {
      for (auto& a : arguments()) n.children.push_back(std::move(a));
      if (at_sep("{")) class_body(n, false, "");
    }
    return finish(n);
  }

  std::string_view src_;
  std::vector<Token> toks_;
  LineIndex lines_;
  std::size_t pos_ = 0;
  std::size_t nesting_ = 0;
  bool no_lambda_ = false;
};

}  // namespace

Ast parse_java(std::string_view source, std::string file_path) {
  if (source.empty()) throw ParseError("empty source", 1, 1);
  Parser parser(source, lex_java(source, LexMode::Strict));
  AstNode root = parser.compilation_unit();
  return Ast(std::move(root), utf8_length(source), std::move(file_path));
}

}  // namespace perfimpact
