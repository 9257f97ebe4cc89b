#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace perfimpact {

// Closed catalog of node kinds. Declaration order is the canonical total order.
enum class NodeKind : std::uint8_t {
  CompilationUnit,
  ImportDeclaration,
  ClassDeclaration,
  MethodDeclaration,
  VariableDeclaration,
  VariableDeclarator,
  MethodExpression,
  BlockStatement,
  IfStatement,
  SwitchStatement,
  ConditionalExpression,
  ForStatement,
  ForEachStatement,
  WhileStatement,
  DoStatement,
  ReturnStatement,
  BinaryExpression,
  UnaryExpression,
  MethodCall,
  Identifier,
  Literal,
  Unknown,
};

inline constexpr std::size_t kNodeKindCount = 22;

const std::array<NodeKind, kNodeKindCount>& all_node_kinds();
std::string_view kind_name(NodeKind kind);
std::optional<NodeKind> kind_from_name(std::string_view name);

// Set of node kinds, iterable in catalog order.
class KindSet {
 public:
  KindSet() = default;
  KindSet(std::initializer_list<NodeKind> kinds) {
    for (NodeKind k : kinds) insert(k);
  }

  static KindSet full() {
    KindSet s;
    s.bits_.set();
    return s;
  }

  void insert(NodeKind k) { bits_.set(static_cast<std::size_t>(k)); }
  bool contains(NodeKind k) const { return bits_.test(static_cast<std::size_t>(k)); }
  std::size_t size() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }

  KindSet operator|(const KindSet& o) const { return KindSet(bits_ | o.bits_); }
  KindSet operator&(const KindSet& o) const { return KindSet(bits_ & o.bits_); }
  bool operator==(const KindSet&) const = default;

  std::vector<NodeKind> kinds() const;

 private:
  explicit KindSet(std::bitset<kNodeKindCount> bits) : bits_(bits) {}
  std::bitset<kNodeKindCount> bits_;
};

// Half-open byte range into the parsed source.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool contains(const Span& inner) const { return begin <= inner.begin && inner.end <= end; }
  bool operator==(const Span&) const = default;
};

struct AstNode {
  NodeKind kind = NodeKind::Unknown;
  std::map<std::string, std::string> attributes;
  std::vector<AstNode> children;
  Span span;

  // Empty view when the attribute is absent.
  std::string_view attribute(std::string_view key) const;
};

class Ast {
 public:
  Ast(AstNode root, std::size_t source_length_chars, std::string file_path);

  const AstNode& root() const { return root_; }
  // Unicode scalar values in the parsed text.
  std::size_t source_length_chars() const { return source_length_chars_; }
  const std::string& file_path() const { return file_path_; }

 private:
  AstNode root_;
  std::size_t source_length_chars_;
  std::string file_path_;
};

std::vector<NodeKind> preorder(const Ast& ast);
std::size_t count_kinds(const Ast& ast, const KindSet& kinds);
std::size_t node_count(const Ast& ast);

// Calls visit(node, depth) root-first. Iterative, so deep expression chains
// cannot exhaust the stack.
template <typename Visitor>
void visit_preorder(const AstNode& root, Visitor&& visit) {
  std::vector<std::pair<const AstNode*, std::size_t>> stack{{&root, 0}};
  while (!stack.empty()) {
    auto [node, depth] = stack.back();
    stack.pop_back();
    visit(*node, depth);
    for (auto it = node->children.rbegin(); it != node->children.rend(); ++it) {
      stack.emplace_back(&*it, depth + 1);
    }
  }
}

// One node per line: "<indent><Kind> <key:value ...> [begin,end)".
void dump_ast(const Ast& ast, std::ostream& out);
std::string dump_ast(const Ast& ast);

// Counts Unicode scalar values in UTF-8 text (non-continuation bytes).
std::size_t utf8_length(std::string_view text);

}  // namespace perfimpact
