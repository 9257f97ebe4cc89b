#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "perfimpact/ast.hpp"
#include "perfimpact/astbe.hpp"

namespace perfimpact {

// log10((count + 1) / file_len). Throws InvalidArgument when file_len == 0.
double fe_transform(std::size_t count, std::size_t file_len);

enum class FeatureCategory { Lexical, Layout, Syntactic, Embedding };

struct FeatureColumn {
  std::string name;
  FeatureCategory category;
};

// Corpus-level state for the column blocks that depend on every file of a run.
struct CorpusContext {
  std::vector<std::string> unigram_vocabulary;  // identifiers, most frequent first
  std::map<NodeKind, double> idf;               // ln(N / (1 + df)) + 1 per kind
  std::optional<EmbeddingMatrix> embedding;
};

// Ordered, uniquely named feature columns. The "paper13" profile is fully
// determined; "full" adds unigram, AST tf-idf and embedding blocks whose
// columns are fixed only once a CorpusContext is known (see resolved()).
class FeatureSchema {
 public:
  static FeatureSchema paper13();
  static FeatureSchema full();
  static FeatureSchema by_name(std::string_view name);  // throws InvalidArgument
  // Schema whose columns are exactly `names`; flags are inferred from prefixes.
  static FeatureSchema from_column_names(std::span<const std::string> names);

  const std::string& profile() const { return profile_; }
  const std::vector<FeatureColumn>& columns() const { return columns_; }
  std::vector<std::string> column_names() const;
  std::size_t size() const { return columns_.size(); }

  bool enable_unigrams() const { return enable_unigrams_; }
  bool enable_ast_tfidf() const { return enable_ast_tfidf_; }
  bool enable_embedding() const { return enable_embedding_; }
  bool needs_ast() const;
  bool needs_corpus() const { return enable_unigrams_ || enable_ast_tfidf_ || enable_embedding_; }

  // Appends the corpus-dependent columns. Idempotent on resolved schemas.
  FeatureSchema resolved(const CorpusContext& context) const;
  bool is_resolved() const { return resolved_; }

  bool operator==(const FeatureSchema& other) const { return column_names() == other.column_names(); }

 private:
  std::string profile_;
  std::vector<FeatureColumn> columns_;
  bool enable_unigrams_ = false;
  bool enable_ast_tfidf_ = false;
  bool enable_embedding_ = false;
  bool resolved_ = true;
};

// Named values produced by one extractor.
struct FeatureBlock {
  std::vector<std::string> names;
  std::vector<double> values;
  std::map<std::string, std::size_t> raw_counts;

  void add(std::string name, double value) {
    names.push_back(std::move(name));
    values.push_back(value);
  }
  void add_count(const std::string& name, std::size_t count, std::size_t file_len);
  std::optional<double> get(std::string_view name) const;
};

struct CommentCounts {
  std::size_t line = 0;
  std::size_t block = 0;  // block comments that are not doc comments
  std::size_t doc = 0;    // block comments opening with "/**"
  std::size_t total() const { return line + block + doc; }
};

// Matches of /\*(.|[\r\n])*?\*/|//.* scanned left to right, non-overlapping.
// Like the pattern, this is not aware of string literals.
CommentCounts count_comments(std::string_view source);

// Lines that look like an import declaration.
std::size_t count_import_lines(std::string_view source);

// Reserved keywords outside comments and literals.
std::size_t count_keywords(std::string_view source);

// Method declarations found by token shape; used when no Ast is available.
std::size_t count_method_heads(std::string_view source);

// Identifier token frequencies outside comments and literals.
std::map<std::string, std::size_t> identifier_counts(std::string_view source);

// lex_imports, lex_line_comments, lex_block_comments, lex_doc_comments,
// lex_keywords, lex_methods and, when `unigrams` is non-empty, one
// uni_<identifier> column per entry. Methods come from `ast` when given.
FeatureBlock extract_lexical(std::string_view source, const Ast* ast = nullptr,
                             std::span<const std::string> unigrams = {});

// lay_avg_line_len, lay_sd_line_len (over non-blank lines), lay_empty_lines,
// lay_ws_ratio, lay_tabs. Lines split on '\n' with trailing '\r' removed.
FeatureBlock extract_layout(std::string_view source);

// syn_conditionals, syn_literals, syn_loops, syn_nodes and, when `idf` is
// given, tfidf_<Kind> for every catalog kind.
FeatureBlock extract_syntactic(const Ast& ast, const std::map<NodeKind, double>* idf = nullptr);

struct FeatureVector {
  std::shared_ptr<const FeatureSchema> schema;
  std::vector<double> values;
  std::string file_path;
  std::map<std::string, std::size_t> raw_counts;
  std::size_t file_length_chars = 0;

  double value(std::string_view column) const;  // throws InvalidArgument
};

// Throws InvalidArgument for an empty source or a schema that needs corpus
// state not present in `context`; ParseError propagates when the schema has
// AST-derived columns and the source does not parse.
FeatureVector extract_file(std::string_view source, std::shared_ptr<const FeatureSchema> schema,
                           std::string file_path = {}, const CorpusContext* context = nullptr);

struct SourceFile {
  std::string path;
  std::string text;
};

struct SkippedFile {
  std::string path;
  std::string reason;
};

struct CorpusFeatures {
  std::shared_ptr<const FeatureSchema> schema;  // resolved
  CorpusContext context;
  std::vector<FeatureVector> vectors;
  std::vector<SkippedFile> skipped;
};

// Top identifiers by frequency across files, ties broken by name.
std::vector<std::string> unigram_vocabulary(std::span<const SourceFile> files, std::size_t limit);
std::map<NodeKind, double> ast_idf(std::span<const Ast> asts);

inline constexpr std::size_t kDefaultUnigramLimit = 20;

// Extracts every file, skipping empty and unparseable ones. Corpus-dependent
// blocks are computed over the files that survive.
CorpusFeatures extract_corpus(std::span<const SourceFile> files, const FeatureSchema& schema,
                              const CbowConfig& cbow = {});

}  // namespace perfimpact
