#include "perfimpact/ast.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

namespace perfimpact {

namespace {

constexpr std::array<std::string_view, kNodeKindCount> kKindNames = {
    "CompilationUnit",   "ImportDeclaration",    "ClassDeclaration",
    "MethodDeclaration", "VariableDeclaration",  "VariableDeclarator",
    "MethodExpression",  "BlockStatement",       "IfStatement",
    "SwitchStatement",   "ConditionalExpression", "ForStatement",
    "ForEachStatement",  "WhileStatement",       "DoStatement",
    "ReturnStatement",   "BinaryExpression",     "UnaryExpression",
    "MethodCall",        "Identifier",           "Literal",
    "Unknown",
};

bool needs_quoting(std::string_view value) {
  if (value.empty()) return true;
  return std::any_of(value.begin(), value.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '"' || c == '\\';
  });
}

void write_value(std::ostream& out, std::string_view value) {
  if (!needs_quoting(value)) {
    out << value;
    return;
  }
  out << '"';
  for (char c : value) {
    switch (c) {
      case '"': out << "\\\""; break;
      case '\\': out << "\\\\"; break;
      case '\n': out << "\\n"; break;
      case '\r': out << "\\r"; break;
      case '\t': out << "\\t"; break;
      default: out << c;
    }
  }
  out << '"';
}

}  // namespace

const std::array<NodeKind, kNodeKindCount>& all_node_kinds() {
  static const auto kinds = [] {
    std::array<NodeKind, kNodeKindCount> out{};
    for (std::size_t i = 0; i < kNodeKindCount; ++i) out[i] = static_cast<NodeKind>(i);
    return out;
  }();
  return kinds;
}

std::string_view kind_name(NodeKind kind) {
  return kKindNames.at(static_cast<std::size_t>(kind));
}

std::optional<NodeKind> kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNodeKindCount; ++i) {
    if (kKindNames[i] == name) return static_cast<NodeKind>(i);
  }
  return std::nullopt;
}

std::vector<NodeKind> KindSet::kinds() const {
  std::vector<NodeKind> out;
  for (NodeKind k : all_node_kinds()) {
    if (contains(k)) out.push_back(k);
  }
  return out;
}

std::string_view AstNode::attribute(std::string_view key) const {
  auto it = attributes.find(std::string(key));
  return it == attributes.end() ? std::string_view{} : std::string_view{it->second};
}

Ast::Ast(AstNode root, std::size_t source_length_chars, std::string file_path)
    : root_(std::move(root)),
      source_length_chars_(source_length_chars),
      file_path_(std::move(file_path)) {}

std::vector<NodeKind> preorder(const Ast& ast) {
  std::vector<NodeKind> out;
  visit_preorder(ast.root(), [&](const AstNode& node, std::size_t) { out.push_back(node.kind); });
  return out;
}

std::size_t count_kinds(const Ast& ast, const KindSet& kinds) {
  if (kinds.empty()) return 0;
  std::size_t n = 0;
  visit_preorder(ast.root(), [&](const AstNode& node, std::size_t) {
    if (kinds.contains(node.kind)) ++n;
  });
  return n;
}

std::size_t node_count(const Ast& ast) { return count_kinds(ast, KindSet::full()); }

void dump_ast(const Ast& ast, std::ostream& out) {
  visit_preorder(ast.root(), [&](const AstNode& node, std::size_t depth) {
    out << std::string(depth * 2, ' ') << kind_name(node.kind);
    for (const auto& [key, value] : node.attributes) {
      out << ' ' << key << ':';
      write_value(out, value);
    }
    out << " [" << node.span.begin << ',' << node.span.end << ")\n";
  });
}

std::string dump_ast(const Ast& ast) {
  std::ostringstream out;
  dump_ast(ast, out);
  return out.str();
}

std::size_t utf8_length(std::string_view text) {
  return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

}  // namespace perfimpact
