#include "perfimpact/stylometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <regex>
#include <unordered_map>

#include "perfimpact/errors.hpp"
#include "perfimpact/java_lexer.hpp"
#include "perfimpact/java_parser.hpp"

namespace perfimpact {

namespace {

constexpr std::string_view kUnigramPrefix = "uni_";
constexpr std::string_view kTfidfPrefix = "tfidf_";
constexpr std::string_view kEmbeddingPrefix = "emb_";

const std::vector<FeatureColumn>& base_catalog() {
  static const std::vector<FeatureColumn> columns = {
      {"lex_imports", FeatureCategory::Lexical},
      {"lex_line_comments", FeatureCategory::Lexical},
      {"lex_block_comments", FeatureCategory::Lexical},
      {"lex_doc_comments", FeatureCategory::Lexical},
      {"lex_keywords", FeatureCategory::Lexical},
      {"lex_methods", FeatureCategory::Lexical},
      {"lay_avg_line_len", FeatureCategory::Layout},
      {"lay_sd_line_len", FeatureCategory::Layout},
      {"lay_empty_lines", FeatureCategory::Layout},
      {"lay_ws_ratio", FeatureCategory::Layout},
      {"lay_tabs", FeatureCategory::Layout},
      {"syn_conditionals", FeatureCategory::Syntactic},
      {"syn_literals", FeatureCategory::Syntactic},
      {"syn_loops", FeatureCategory::Syntactic},
      {"syn_nodes", FeatureCategory::Syntactic},
  };
  return columns;
}

const std::vector<std::string>& paper13_names() {
  static const std::vector<std::string> names = {
      "lex_imports",      "lex_line_comments", "lex_block_comments", "lex_doc_comments",
      "lex_keywords",     "lex_methods",       "lay_avg_line_len",   "lay_sd_line_len",
      "lay_empty_lines",  "lay_ws_ratio",      "syn_conditionals",   "syn_literals",
      "syn_loops",
  };
  return names;
}

std::optional<FeatureCategory> category_of(std::string_view name) {
  for (const auto& c : base_catalog()) {
    if (c.name == name) return c.category;
  }
  if (name.starts_with(kUnigramPrefix)) return FeatureCategory::Lexical;
  if (name.starts_with(kTfidfPrefix)) return FeatureCategory::Syntactic;
  if (name.starts_with(kEmbeddingPrefix)) return FeatureCategory::Embedding;
  return std::nullopt;
}

const KindSet& conditional_kinds() {
  static const KindSet s{NodeKind::IfStatement, NodeKind::SwitchStatement,
                         NodeKind::ConditionalExpression};
  return s;
}

const KindSet& loop_kinds() {
  static const KindSet s{NodeKind::ForStatement, NodeKind::ForEachStatement,
                         NodeKind::WhileStatement, NodeKind::DoStatement};
  return s;
}

bool is_primitive_keyword(std::string_view s) {
  return s == "boolean" || s == "byte" || s == "char" || s == "short" || s == "int" ||
         s == "long" || s == "float" || s == "double" || s == "void";
}

bool is_modifier_keyword(std::string_view s) {
  return s == "public" || s == "protected" || s == "private" || s == "static" ||
         s == "abstract" || s == "final" || s == "native" || s == "synchronized" ||
         s == "strictfp";
}

struct Line {
  std::size_t length;  // characters
  bool blank;
};

// A trailing newline terminates the last line rather than opening a new one.
std::vector<Line> split_lines(std::string_view source) {
  std::vector<Line> lines;
  std::size_t start = 0;
  while (start <= source.size()) {
    std::size_t nl = source.find('\n', start);
    std::size_t end = nl == std::string_view::npos ? source.size() : nl;
    if (nl == std::string_view::npos && start == source.size() && !lines.empty()) break;
    std::string_view line = source.substr(start, end - start);
    if (line.ends_with('\r')) line.remove_suffix(1);
    bool blank = std::all_of(line.begin(), line.end(), [](char c) {
      return c == ' ' || c == '\t' || c == '\f' || c == '\v' || c == '\r';
    });
    lines.push_back({utf8_length(line), blank});
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

bool is_whitespace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

FeatureVector assemble(std::string_view source, const Ast* ast,
                       std::shared_ptr<const FeatureSchema> schema, std::string file_path,
                       const CorpusContext* context) {
  const std::size_t len = utf8_length(source);
  if (len == 0) throw InvalidArgument("empty source: " + file_path);

  std::vector<std::string> unigrams;
  bool want_tfidf = false;
  bool want_embedding = false;
  for (const auto& col : schema->columns()) {
    if (col.name.starts_with(kUnigramPrefix)) {
      unigrams.push_back(col.name.substr(kUnigramPrefix.size()));
    }
    want_tfidf = want_tfidf || col.name.starts_with(kTfidfPrefix);
    want_embedding = want_embedding || col.name.starts_with(kEmbeddingPrefix);
  }

  FeatureBlock lexical = extract_lexical(source, ast, unigrams);
  FeatureBlock layout = extract_layout(source);
  std::optional<FeatureBlock> syntactic;
  if (ast) {
    std::map<NodeKind, double> own_idf;
    const std::map<NodeKind, double>* idf = nullptr;
    if (want_tfidf) {
      if (context && !context->idf.empty()) {
        idf = &context->idf;
      } else {
        own_idf = ast_idf(std::span<const Ast>(ast, 1));
        idf = &own_idf;
      }
    }
    syntactic = extract_syntactic(*ast, idf);
  }
  std::optional<Eigen::VectorXd> embedding;
  if (want_embedding) {
    if (!context || !context->embedding) {
      throw InvalidArgument("embedding columns need a trained embedding matrix");
    }
    if (!ast) throw InvalidArgument("embedding columns need a parsed source");
    embedding = embed_file(*ast, *context->embedding).values;
  }

  FeatureVector fv;
  fv.schema = schema;
  fv.file_path = std::move(file_path);
  fv.file_length_chars = len;
  fv.values.reserve(schema->size());
  for (const auto& col : schema->columns()) {
    std::optional<double> v;
    const FeatureBlock* source_block = nullptr;
    const std::array<const FeatureBlock*, 3> blocks = {&lexical, &layout,
                                                        syntactic ? &*syntactic : nullptr};
    for (const FeatureBlock* block : blocks) {
      if (!block) continue;
      if ((v = block->get(col.name))) {
        source_block = block;
        break;
      }
    }
    if (!v && col.name.starts_with(kEmbeddingPrefix) && embedding) {
      const auto idx = std::stoul(col.name.substr(kEmbeddingPrefix.size()));
      if (idx >= static_cast<std::size_t>(embedding->size())) {
        throw InvalidArgument("embedding column out of range: " + col.name);
      }
      v = (*embedding)(static_cast<Eigen::Index>(idx));
    }
    if (!v) {
      if (!ast && col.category == FeatureCategory::Syntactic) {
        throw InvalidArgument("column " + col.name + " needs a parsed source");
      }
      throw InvalidArgument("unknown feature column: " + col.name);
    }
    if (!std::isfinite(*v)) throw NonFiniteInput("non-finite value in column " + col.name);
    fv.values.push_back(*v);
    if (source_block) {
      auto it = source_block->raw_counts.find(col.name);
      if (it != source_block->raw_counts.end()) fv.raw_counts.emplace(col.name, it->second);
    }
  }
  return fv;
}

}  // namespace

double fe_transform(std::size_t count, std::size_t file_len) {
  if (file_len == 0) throw InvalidArgument("fe_transform: file length must be positive");
  return std::log10((static_cast<double>(count) + 1.0) / static_cast<double>(file_len));
}

// ---- schema ---------------------------------------------------------------

FeatureSchema FeatureSchema::paper13() {
  FeatureSchema s;
  s.profile_ = "paper13";
  for (const auto& name : paper13_names()) s.columns_.push_back({name, *category_of(name)});
  return s;
}

FeatureSchema FeatureSchema::full() {
  FeatureSchema s;
  s.profile_ = "full";
  s.columns_ = base_catalog();
  s.enable_unigrams_ = true;
  s.enable_ast_tfidf_ = true;
  s.enable_embedding_ = true;
  s.resolved_ = false;
  return s;
}

FeatureSchema FeatureSchema::by_name(std::string_view name) {
  if (name == "paper13") return paper13();
  if (name == "full") return full();
  throw InvalidArgument("unknown schema profile '" + std::string(name) + "' (paper13|full)");
}

FeatureSchema FeatureSchema::from_column_names(std::span<const std::string> names) {
  FeatureSchema s;
  for (const auto& name : names) {
    auto category = category_of(name);
    if (!category) throw SchemaMismatch("unknown feature column '" + name + "'");
    if (std::any_of(s.columns_.begin(), s.columns_.end(),
                    [&](const FeatureColumn& c) { return c.name == name; })) {
      throw SchemaMismatch("duplicate feature column '" + name + "'");
    }
    s.columns_.push_back({name, *category});
    s.enable_unigrams_ = s.enable_unigrams_ || name.starts_with(kUnigramPrefix);
    s.enable_ast_tfidf_ = s.enable_ast_tfidf_ || name.starts_with(kTfidfPrefix);
    s.enable_embedding_ = s.enable_embedding_ || name.starts_with(kEmbeddingPrefix);
  }
  s.profile_ = s.column_names() == paper13_names() ? "paper13" : "custom";
  return s;
}

std::vector<std::string> FeatureSchema::column_names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

bool FeatureSchema::needs_ast() const {
  return std::any_of(columns_.begin(), columns_.end(), [](const FeatureColumn& c) {
    return c.category == FeatureCategory::Syntactic || c.category == FeatureCategory::Embedding;
  }) || (!resolved_ && (enable_ast_tfidf_ || enable_embedding_));
}

FeatureSchema FeatureSchema::resolved(const CorpusContext& context) const {
  if (resolved_) return *this;
  FeatureSchema s = *this;
  if (enable_unigrams_) {
    for (const auto& word : context.unigram_vocabulary) {
      s.columns_.push_back({std::string(kUnigramPrefix) + word, FeatureCategory::Lexical});
    }
  }
  if (enable_ast_tfidf_) {
    for (NodeKind k : all_node_kinds()) {
      s.columns_.push_back({std::string(kTfidfPrefix) + std::string(kind_name(k)),
                            FeatureCategory::Syntactic});
    }
  }
  if (enable_embedding_) {
    if (!context.embedding) throw InvalidArgument("schema needs an embedding matrix");
    for (Eigen::Index i = 0; i < context.embedding->input_vectors.cols(); ++i) {
      s.columns_.push_back({std::string(kEmbeddingPrefix) + std::to_string(i),
                            FeatureCategory::Embedding});
    }
  }
  s.resolved_ = true;
  return s;
}

// ---- blocks ---------------------------------------------------------------

void FeatureBlock::add_count(const std::string& name, std::size_t count, std::size_t file_len) {
  raw_counts[name] = count;
  add(name, fe_transform(count, std::max<std::size_t>(file_len, 1)));
}

std::optional<double> FeatureBlock::get(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  return std::nullopt;
}

double FeatureVector::value(std::string_view column) const {
  const auto& cols = schema->columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i].name == column) return values[i];
  }
  throw InvalidArgument("no such column: " + std::string(column));
}

// ---- lexical ----------------------------------------------------------------

CommentCounts count_comments(std::string_view s) {
  CommentCounts counts;
  std::size_t pos = 0;
  while (pos + 1 < s.size()) {
    if (s[pos] == '/' && s[pos + 1] == '*') {
      std::size_t close = s.find("*/", pos + 2);
      if (close != std::string_view::npos) {
        // "/**/" is an empty block comment, not a doc comment.
        if (s[pos + 2] == '*' && close > pos + 2) {
          ++counts.doc;
        } else {
          ++counts.block;
        }
        pos = close + 2;
        continue;
      }
    } else if (s[pos] == '/' && s[pos + 1] == '/') {
      ++counts.line;
      std::size_t eol = s.find_first_of("\r\n", pos);
      pos = eol == std::string_view::npos ? s.size() : eol;
      continue;
    }
    ++pos;
  }
  return counts;
}

std::size_t count_import_lines(std::string_view source) {
  static const std::regex pattern(
      R"(^\s*import\s+(static\s+)?[A-Za-z_$][\w$]*(\s*\.\s*(\*|[A-Za-z_$][\w$]*))*\s*;)");
  std::size_t n = 0;
  std::size_t start = 0;
  while (start <= source.size()) {
    std::size_t nl = source.find('\n', start);
    std::size_t end = nl == std::string_view::npos ? source.size() : nl;
    std::string line(source.substr(start, end - start));
    if (line.find("import") != std::string::npos && std::regex_search(line, pattern)) ++n;
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return n;
}

std::size_t count_keywords(std::string_view source) {
  auto tokens = lex_java(source, LexMode::Tolerant);
  return static_cast<std::size_t>(std::count_if(tokens.begin(), tokens.end(), [](const Token& t) {
    return t.type == TokenType::Keyword;
  }));
}

std::size_t count_method_heads(std::string_view source) {
  auto toks = lex_java(source, LexMode::Tolerant);
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < toks.size(); ++i) {
    if (toks[i].type != TokenType::Identifier || !toks[i + 1].is_sep("(")) continue;
    const Token& prev = toks[i - 1];
    bool typed = prev.type == TokenType::Identifier || prev.is_op(">") || prev.is_sep("]") ||
                 (prev.type == TokenType::Keyword &&
                  (is_primitive_keyword(prev.text) || is_modifier_keyword(prev.text)));
    if (!typed) continue;
    int depth = 0;
    std::size_t j = i + 1;
    for (; j < toks.size(); ++j) {
      if (toks[j].is_sep("(")) ++depth;
      if (toks[j].is_sep(")") && --depth == 0) break;
    }
    if (j >= toks.size()) break;
    ++j;
    if (j < toks.size() && toks[j].is_keyword("throws")) {
      while (j < toks.size() && !toks[j].is_sep("{") && !toks[j].is_sep(";")) ++j;
    }
    if (j < toks.size() && toks[j].is_sep("{")) ++n;
  }
  return n;
}

std::map<std::string, std::size_t> identifier_counts(std::string_view source) {
  std::map<std::string, std::size_t> counts;
  for (const Token& t : lex_java(source, LexMode::Tolerant)) {
    if (t.type == TokenType::Identifier) ++counts[std::string(t.text)];
  }
  return counts;
}

FeatureBlock extract_lexical(std::string_view source, const Ast* ast,
                             std::span<const std::string> unigrams) {
  const std::size_t len = utf8_length(source);
  FeatureBlock block;
  const CommentCounts comments = count_comments(source);
  block.add_count("lex_imports", count_import_lines(source), len);
  block.add_count("lex_line_comments", comments.line, len);
  block.add_count("lex_block_comments", comments.block, len);
  block.add_count("lex_doc_comments", comments.doc, len);
  block.add_count("lex_keywords", count_keywords(source), len);
  const std::size_t methods = ast ? count_kinds(*ast, {NodeKind::MethodDeclaration})
                                  : count_method_heads(source);
  block.add_count("lex_methods", methods, len);
  if (!unigrams.empty()) {
    const auto counts = identifier_counts(source);
    for (const auto& word : unigrams) {
      auto it = counts.find(word);
      block.add_count(std::string(kUnigramPrefix) + word, it == counts.end() ? 0 : it->second, len);
    }
  }
  return block;
}

// ---- layout -----------------------------------------------------------------

FeatureBlock extract_layout(std::string_view source) {
  const std::size_t len = utf8_length(source);
  FeatureBlock block;

  const std::vector<Line> lines = split_lines(source);

  std::size_t empty = 0;
  double sum = 0.0;
  std::size_t n = 0;
  for (const Line& l : lines) {
    if (l.blank) {
      ++empty;
    } else {
      sum += static_cast<double>(l.length);
      ++n;
    }
  }
  const double mean = n ? sum / static_cast<double>(n) : 0.0;
  double var = 0.0;
  for (const Line& l : lines) {
    if (!l.blank) var += (static_cast<double>(l.length) - mean) * (static_cast<double>(l.length) - mean);
  }
  const double sd = n ? std::sqrt(var / static_cast<double>(n)) : 0.0;

  std::size_t ws = 0;
  std::size_t tabs = 0;
  for (char c : source) {
    if (is_whitespace(c)) ++ws;
    if (c == '\t') ++tabs;
  }

  block.add("lay_avg_line_len", mean);
  block.add("lay_sd_line_len", sd);
  block.add_count("lay_empty_lines", empty, len);
  block.add("lay_ws_ratio", len ? static_cast<double>(ws) / static_cast<double>(len) : 0.0);
  block.add_count("lay_tabs", tabs, len);
  return block;
}

// ---- syntactic --------------------------------------------------------------

FeatureBlock extract_syntactic(const Ast& ast, const std::map<NodeKind, double>* idf) {
  const std::size_t len = ast.source_length_chars();
  std::array<std::size_t, kNodeKindCount> per_kind{};
  std::size_t total = 0;
  visit_preorder(ast.root(), [&](const AstNode& node, std::size_t) {
    ++per_kind[static_cast<std::size_t>(node.kind)];
    ++total;
  });
  auto sum_of = [&](const KindSet& kinds) {
    std::size_t s = 0;
    for (NodeKind k : kinds.kinds()) s += per_kind[static_cast<std::size_t>(k)];
    return s;
  };

  FeatureBlock block;
  block.add_count("syn_conditionals", sum_of(conditional_kinds()), len);
  block.add_count("syn_literals", per_kind[static_cast<std::size_t>(NodeKind::Literal)], len);
  block.add_count("syn_loops", sum_of(loop_kinds()), len);
  block.add_count("syn_nodes", total, len);
  if (idf) {
    for (NodeKind k : all_node_kinds()) {
      const double tf = static_cast<double>(per_kind[static_cast<std::size_t>(k)]) /
                        static_cast<double>(total);
      auto it = idf->find(k);
      const double weight = it == idf->end() ? 0.0 : it->second;
      block.add(std::string(kTfidfPrefix) + std::string(kind_name(k)), tf * weight);
    }
  }
  return block;
}

std::map<NodeKind, double> ast_idf(std::span<const Ast> asts) {
  std::map<NodeKind, double> idf;
  std::array<std::size_t, kNodeKindCount> df{};
  for (const Ast& ast : asts) {
    KindSet present;
    visit_preorder(ast.root(), [&](const AstNode& node, std::size_t) { present.insert(node.kind); });
    for (NodeKind k : present.kinds()) ++df[static_cast<std::size_t>(k)];
  }
  const double n = static_cast<double>(asts.size());
  for (NodeKind k : all_node_kinds()) {
    idf[k] = std::log(n / (1.0 + static_cast<double>(df[static_cast<std::size_t>(k)]))) + 1.0;
  }
  return idf;
}

std::vector<std::string> unigram_vocabulary(std::span<const SourceFile> files, std::size_t limit) {
  std::map<std::string, std::size_t> totals;
  for (const auto& f : files) {
    for (const auto& [word, n] : identifier_counts(f.text)) totals[word] += n;
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(totals.begin(), totals.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < limit; ++i) out.push_back(ranked[i].first);
  return out;
}

// ---- files ------------------------------------------------------------------

FeatureVector extract_file(std::string_view source, std::shared_ptr<const FeatureSchema> schema,
                           std::string file_path, const CorpusContext* context) {
  if (source.empty()) throw InvalidArgument("empty source: " + file_path);
  if (!schema->is_resolved()) {
    if (schema->enable_embedding()) {
      throw InvalidArgument("schema '" + schema->profile() + "' needs corpus context");
    }
    CorpusContext own;
    if (schema->enable_unigrams()) {
      SourceFile self{file_path, std::string(source)};
      own.unigram_vocabulary = unigram_vocabulary(std::span(&self, 1), kDefaultUnigramLimit);
    }
    schema = std::make_shared<const FeatureSchema>(schema->resolved(context ? *context : own));
  }
  std::optional<Ast> ast;
  if (schema->needs_ast()) {
    ast = parse_java(source, file_path);
  } else {
    try {
      ast = parse_java(source, file_path);
    } catch (const ParseError&) {
    }
  }
  return assemble(source, ast ? &*ast : nullptr, std::move(schema), std::move(file_path), context);
}

CorpusFeatures extract_corpus(std::span<const SourceFile> files, const FeatureSchema& schema,
                              const CbowConfig& cbow) {
  CorpusFeatures out;
  std::vector<const SourceFile*> kept;
  std::vector<std::optional<Ast>> asts;
  for (const auto& f : files) {
    if (utf8_length(f.text) == 0) {
      out.skipped.push_back({f.path, "empty file"});
      continue;
    }
    try {
      asts.emplace_back(parse_java(f.text, f.path));
    } catch (const ParseError& e) {
      if (schema.needs_ast()) {
        out.skipped.push_back({f.path, e.what()});
        continue;
      }
      asts.emplace_back(std::nullopt);
    }
    kept.push_back(&f);
  }

  if (schema.enable_unigrams() && !schema.is_resolved()) {
    std::vector<SourceFile> texts;
    for (const SourceFile* f : kept) texts.push_back(*f);
    out.context.unigram_vocabulary = unigram_vocabulary(texts, kDefaultUnigramLimit);
  }
  std::vector<Ast> parsed;
  if (schema.enable_ast_tfidf() || schema.enable_embedding()) {
    for (const auto& a : asts) {
      if (a) parsed.push_back(*a);
    }
  }
  if (schema.enable_ast_tfidf()) out.context.idf = ast_idf(parsed);
  if (schema.enable_embedding()) {
    NodeCorpus corpus = build_corpus(parsed);
    out.context.embedding = train_cbow(corpus.sequences, cbow);
  }

  auto resolved = std::make_shared<const FeatureSchema>(schema.resolved(out.context));
  out.schema = resolved;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const Ast* ast = asts[i] ? &*asts[i] : nullptr;
    out.vectors.push_back(assemble(kept[i]->text, ast, resolved, kept[i]->path, &out.context));
  }
  return out;
}

}  // namespace perfimpact
