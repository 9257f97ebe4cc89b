#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfimpact/ast.hpp"

namespace perfimpact {

// Statement- and declaration-level kinds that take part in embeddings.
const KindSet& selected_node_kinds();

using NodeSequence = std::vector<NodeKind>;

struct NodeCorpus {
  std::vector<NodeSequence> sequences;  // one per input Ast, same order
  std::vector<std::size_t> empty;       // indices of empty sequences
};

// Preorder kinds of each tree filtered to `selection`.
NodeCorpus build_corpus(std::span<const Ast> asts,
                        const KindSet& selection = selected_node_kinds());

// Admitted kinds in catalog order; index i <-> kinds()[i].
class NodeVocabulary {
 public:
  NodeVocabulary() { index_.fill(-1); }
  static NodeVocabulary from_corpus(std::span<const NodeSequence> corpus);
  static NodeVocabulary from_kinds(std::span<const NodeKind> kinds);

  std::size_t size() const { return kinds_.size(); }
  const std::vector<NodeKind>& kinds() const { return kinds_; }
  std::optional<std::size_t> index_of(NodeKind kind) const;

 private:
  std::vector<NodeKind> kinds_;
  std::array<int, kNodeKindCount> index_{};
};

struct CbowConfig {
  int embedding_dim = 16;
  int window = 2;
  int negative_samples = 5;
  int epochs = 50;
  double learning_rate = 0.025;
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidArgument
};

struct EmbeddingMatrix {
  NodeVocabulary vocabulary;
  Eigen::MatrixXd input_vectors;   // |V| x d
  Eigen::MatrixXd output_vectors;  // |V| x d
  CbowConfig config;
  std::vector<double> epoch_loss;  // mean loss per epoch
  std::vector<std::string> warnings;
};

// Throws EmptyCorpus when no sequence is non-empty. A one-kind vocabulary is
// returned initialized and untrained with a DegenerateVocabulary warning.
EmbeddingMatrix train_cbow(std::span<const NodeSequence> corpus, const CbowConfig& config);

struct FileEmbedding {
  Eigen::VectorXd values;
  std::string file_path;
  std::optional<std::string> warning;  // set when no selected node was in vocabulary
};

// Mean input vector over the file's selected-node sequence.
FileEmbedding embed_file(const Ast& ast, const EmbeddingMatrix& matrix);
Eigen::VectorXd embed_sequence(std::span<const NodeKind> sequence, const EmbeddingMatrix& matrix);

// One CBOW training example in vocabulary indices.
struct CbowExample {
  std::vector<std::size_t> context;
  std::size_t center = 0;
  std::vector<std::size_t> negatives;
};

// Negative-sampling loss:
//   -log sig(u_center . h) - sum_n log sig(-u_n . h),  h = mean of context rows.
double cbow_loss(const Eigen::MatrixXd& input, const Eigen::MatrixXd& output,
                 const CbowExample& example);

struct CbowGradient {
  double loss = 0.0;
  Eigen::MatrixXd d_input;
  Eigen::MatrixXd d_output;
};

// Exact gradient of cbow_loss with respect to both matrices.
CbowGradient cbow_gradient(const Eigen::MatrixXd& input, const Eigen::MatrixXd& output,
                           const CbowExample& example);

// CSV: header "kind,dim_0,...,dim_{d-1}", one row per vocabulary kind, 9
// significant digits.
void write_embedding_csv(const EmbeddingMatrix& matrix, std::ostream& out);
EmbeddingMatrix read_embedding_csv(std::istream& in);

}  // namespace perfimpact
