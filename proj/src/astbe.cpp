#include "perfimpact/astbe.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "perfimpact/csv.hpp"
#include "perfimpact/errors.hpp"
#include "perfimpact/random.hpp"

namespace perfimpact {

namespace {

constexpr double kUnigramPower = 0.75;
constexpr double kFinalLearningRateFraction = 0.1;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// -log(sigmoid(x)) without overflow for large |x|.
double neg_log_sigmoid(double x) {
  return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

// Forward/backward pass shared by the loss, the gradient and training.
struct CbowPass {
  double loss = 0.0;
  Eigen::RowVectorXd hidden;
  Eigen::RowVectorXd d_hidden;
  std::vector<std::pair<std::size_t, double>> target_coeff;  // (row, dL/d(u.h))
};

CbowPass cbow_pass(const Eigen::MatrixXd& input, const Eigen::MatrixXd& output,
                   const CbowExample& ex) {
  CbowPass pass;
  const auto dim = input.cols();
  pass.hidden = Eigen::RowVectorXd::Zero(dim);
  for (std::size_t j : ex.context) pass.hidden += input.row(static_cast<Eigen::Index>(j));
  pass.hidden /= static_cast<double>(ex.context.size());
  pass.d_hidden = Eigen::RowVectorXd::Zero(dim);

  auto score = [&](std::size_t target, double label) {
    const double z = output.row(static_cast<Eigen::Index>(target)).dot(pass.hidden);
    pass.loss += label > 0.5 ? neg_log_sigmoid(z) : neg_log_sigmoid(-z);
    const double g = sigmoid(z) - label;
    pass.d_hidden += g * output.row(static_cast<Eigen::Index>(target));
    pass.target_coeff.emplace_back(target, g);
  };
  score(ex.center, 1.0);
  for (std::size_t n : ex.negatives) score(n, 0.0);
  return pass;
}

// Cumulative unigram^0.75 distribution over vocabulary indices.
std::vector<double> noise_distribution(std::span<const NodeSequence> corpus,
                                       const NodeVocabulary& vocab) {
  std::vector<double> counts(vocab.size(), 0.0);
  for (const auto& seq : corpus) {
    for (NodeKind k : seq) {
      if (auto i = vocab.index_of(k)) counts[*i] += 1.0;
    }
  }
  std::vector<double> cumulative(vocab.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    total += std::pow(counts[i], kUnigramPower);
    cumulative[i] = total;
  }
  for (double& c : cumulative) c /= total;
  return cumulative;
}

std::size_t sample_noise(const std::vector<double>& cumulative, Rng& rng) {
  const double u = rng.uniform();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

}  // namespace

const KindSet& selected_node_kinds() {
  static const KindSet kinds{
      NodeKind::MethodDeclaration, NodeKind::VariableDeclaration, NodeKind::BlockStatement,
      NodeKind::IfStatement,       NodeKind::SwitchStatement,     NodeKind::ForStatement,
      NodeKind::ForEachStatement,  NodeKind::WhileStatement,      NodeKind::DoStatement,
      NodeKind::ReturnStatement,   NodeKind::MethodCall,          NodeKind::BinaryExpression,
      NodeKind::Literal,           NodeKind::Identifier,
  };
  return kinds;
}

NodeCorpus build_corpus(std::span<const Ast> asts, const KindSet& selection) {
  NodeCorpus corpus;
  corpus.sequences.reserve(asts.size());
  for (const Ast& ast : asts) {
    NodeSequence seq;
    for (NodeKind k : preorder(ast)) {
      if (selection.contains(k)) seq.push_back(k);
    }
    if (seq.empty()) corpus.empty.push_back(corpus.sequences.size());
    corpus.sequences.push_back(std::move(seq));
  }
  return corpus;
}

NodeVocabulary NodeVocabulary::from_corpus(std::span<const NodeSequence> corpus) {
  KindSet seen;
  for (const auto& seq : corpus) {
    for (NodeKind k : seq) seen.insert(k);
  }
  auto kinds = seen.kinds();
  return from_kinds(kinds);
}

NodeVocabulary NodeVocabulary::from_kinds(std::span<const NodeKind> kinds) {
  NodeVocabulary v;
  for (NodeKind k : kinds) {
    auto& slot = v.index_[static_cast<std::size_t>(k)];
    if (slot >= 0) throw InvalidArgument("duplicate kind in vocabulary");
    slot = static_cast<int>(v.kinds_.size());
    v.kinds_.push_back(k);
  }
  return v;
}

std::optional<std::size_t> NodeVocabulary::index_of(NodeKind kind) const {
  int i = index_[static_cast<std::size_t>(kind)];
  if (i < 0) return std::nullopt;
  return static_cast<std::size_t>(i);
}

void CbowConfig::validate() const {
  if (embedding_dim < 2) throw InvalidArgument("embedding_dim must be >= 2");
  if (window < 1) throw InvalidArgument("window must be positive");
  if (negative_samples < 1) throw InvalidArgument("negative_samples must be positive");
  if (epochs < 1) throw InvalidArgument("epochs must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
}

double cbow_loss(const Eigen::MatrixXd& input, const Eigen::MatrixXd& output,
                 const CbowExample& example) {
  return cbow_pass(input, output, example).loss;
}

CbowGradient cbow_gradient(const Eigen::MatrixXd& input, const Eigen::MatrixXd& output,
                           const CbowExample& example) {
  CbowPass pass = cbow_pass(input, output, example);
  CbowGradient grad;
  grad.loss = pass.loss;
  grad.d_input = Eigen::MatrixXd::Zero(input.rows(), input.cols());
  grad.d_output = Eigen::MatrixXd::Zero(output.rows(), output.cols());
  for (auto [row, g] : pass.target_coeff) {
    grad.d_output.row(static_cast<Eigen::Index>(row)) += g * pass.hidden;
  }
  const Eigen::RowVectorXd share = pass.d_hidden / static_cast<double>(example.context.size());
  for (std::size_t j : example.context) grad.d_input.row(static_cast<Eigen::Index>(j)) += share;
  return grad;
}

EmbeddingMatrix train_cbow(std::span<const NodeSequence> corpus, const CbowConfig& config) {
  config.validate();
  const bool any = std::any_of(corpus.begin(), corpus.end(),
                               [](const NodeSequence& s) { return !s.empty(); });
  if (!any) throw EmptyCorpus("no non-empty node sequence to train on");

  EmbeddingMatrix m;
  m.config = config;
  m.vocabulary = NodeVocabulary::from_corpus(corpus);
  const auto vocab_size = static_cast<Eigen::Index>(m.vocabulary.size());
  const Eigen::Index dim = config.embedding_dim;

  Rng rng(config.seed);
  const double bound = 0.5 / static_cast<double>(dim);
  m.input_vectors.resize(vocab_size, dim);
  for (Eigen::Index r = 0; r < vocab_size; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) m.input_vectors(r, c) = rng.uniform(-bound, bound);
  }
  m.output_vectors = Eigen::MatrixXd::Zero(vocab_size, dim);

  // Token index sequences; every kind is in the vocabulary by construction.
  std::vector<std::vector<std::size_t>> ids;
  std::size_t positions = 0;
  for (const auto& seq : corpus) {
    std::vector<std::size_t> row;
    row.reserve(seq.size());
    for (NodeKind k : seq) row.push_back(*m.vocabulary.index_of(k));
    if (row.size() >= 2) positions += row.size();
    ids.push_back(std::move(row));
  }

  const bool degenerate = m.vocabulary.size() == 1;
  if (degenerate) {
    m.warnings.push_back("DegenerateVocabulary: a single node kind; embeddings left at initialization");
  }
  const auto noise = noise_distribution(corpus, m.vocabulary);
  const double total_steps = static_cast<double>(positions) * config.epochs;
  const auto window = static_cast<std::size_t>(config.window);
  std::size_t step = 0;

  // Epoch loss is measured after each epoch on every position with negatives
  // drawn once from a separate stream, so successive values differ only by
  // the parameter updates and not by sampling noise.
  std::vector<CbowExample> probe;
  {
    Rng probe_rng(config.seed ^ 0x5851f42d4c957f2dULL);
    for (const auto& seq : ids) {
      for (std::size_t c = 0; c < seq.size(); ++c) {
        CbowExample pe;
        const std::size_t lo = c >= window ? c - window : 0;
        const std::size_t hi = std::min(seq.size() - 1, c + window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j != c) pe.context.push_back(seq[j]);
        }
        if (pe.context.empty()) continue;
        pe.center = seq[c];
        for (int n = 0; n < config.negative_samples; ++n) {
          std::size_t draw = sample_noise(noise, probe_rng);
          if (draw != pe.center) pe.negatives.push_back(draw);
        }
        probe.push_back(std::move(pe));
      }
    }
  }

  CbowExample ex;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& seq : ids) {
      for (std::size_t c = 0; c < seq.size(); ++c) {
        ex.context.clear();
        ex.negatives.clear();
        const std::size_t lo = c >= window ? c - window : 0;
        const std::size_t hi = std::min(seq.size() - 1, c + window);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j != c) ex.context.push_back(seq[j]);
        }
        if (ex.context.empty()) continue;
        ex.center = seq[c];
        for (int n = 0; n < config.negative_samples; ++n) {
          std::size_t draw = sample_noise(noise, rng);
          if (draw != ex.center) ex.negatives.push_back(draw);
        }

        CbowPass pass = cbow_pass(m.input_vectors, m.output_vectors, ex);
        if (!degenerate) {
          const double progress = total_steps > 0 ? static_cast<double>(step) / total_steps : 0.0;
          const double lr = config.learning_rate *
                            std::max(kFinalLearningRateFraction,
                                     1.0 - (1.0 - kFinalLearningRateFraction) * progress);
          for (auto [row, g] : pass.target_coeff) {
            m.output_vectors.row(static_cast<Eigen::Index>(row)) -= lr * g * pass.hidden;
          }
          const Eigen::RowVectorXd share =
              (lr / static_cast<double>(ex.context.size())) * pass.d_hidden;
          for (std::size_t j : ex.context) {
            m.input_vectors.row(static_cast<Eigen::Index>(j)) -= share;
          }
        }
        ++step;
      }
    }
    double loss_sum = 0.0;
    for (const auto& pe : probe) loss_sum += cbow_pass(m.input_vectors, m.output_vectors, pe).loss;
    m.epoch_loss.push_back(probe.empty() ? 0.0 : loss_sum / static_cast<double>(probe.size()));
  }
  return m;
}

Eigen::VectorXd embed_sequence(std::span<const NodeKind> sequence, const EmbeddingMatrix& matrix) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(matrix.input_vectors.cols());
  std::size_t n = 0;
  for (NodeKind k : sequence) {
    if (auto i = matrix.vocabulary.index_of(k)) {
      sum += matrix.input_vectors.row(static_cast<Eigen::Index>(*i)).transpose();
      ++n;
    }
  }
  if (n > 0) sum /= static_cast<double>(n);
  return sum;
}

FileEmbedding embed_file(const Ast& ast, const EmbeddingMatrix& matrix) {
  NodeSequence seq;
  for (NodeKind k : preorder(ast)) {
    if (selected_node_kinds().contains(k)) seq.push_back(k);
  }
  FileEmbedding out;
  out.file_path = ast.file_path();
  out.values = embed_sequence(seq, matrix);
  const bool any_known = std::any_of(seq.begin(), seq.end(), [&](NodeKind k) {
    return matrix.vocabulary.index_of(k).has_value();
  });
  if (!any_known) out.warning = "no selected nodes in vocabulary; zero embedding";
  return out;
}

void write_embedding_csv(const EmbeddingMatrix& matrix, std::ostream& out) {
  std::vector<std::string> row{"kind"};
  for (Eigen::Index c = 0; c < matrix.input_vectors.cols(); ++c) {
    row.push_back("dim_" + std::to_string(c));
  }
  csv::write_row(out, row);
  for (std::size_t r = 0; r < matrix.vocabulary.size(); ++r) {
    row.assign(1, std::string(kind_name(matrix.vocabulary.kinds()[r])));
    for (Eigen::Index c = 0; c < matrix.input_vectors.cols(); ++c) {
      row.push_back(csv::format_double(matrix.input_vectors(static_cast<Eigen::Index>(r), c), 9));
    }
    csv::write_row(out, row);
  }
}

EmbeddingMatrix read_embedding_csv(std::istream& in) {
  auto rows = csv::read_all(in);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "kind") {
    throw SchemaMismatch("embedding csv: missing 'kind' header");
  }
  const auto dim = static_cast<Eigen::Index>(rows[0].size() - 1);
  for (Eigen::Index c = 0; c < dim; ++c) {
    if (rows[0][static_cast<std::size_t>(c + 1)] != "dim_" + std::to_string(c)) {
      throw SchemaMismatch("embedding csv: unexpected header column");
    }
  }
  std::vector<NodeKind> kinds;
  EmbeddingMatrix m;
  m.input_vectors.resize(static_cast<Eigen::Index>(rows.size() - 1), dim);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(dim + 1)) {
      throw SchemaMismatch("embedding csv: ragged row");
    }
    auto kind = kind_from_name(rows[r][0]);
    if (!kind) throw SchemaMismatch("embedding csv: unknown kind '" + rows[r][0] + "'");
    kinds.push_back(*kind);
    for (Eigen::Index c = 0; c < dim; ++c) {
      m.input_vectors(static_cast<Eigen::Index>(r - 1), c) =
          csv::parse_double(rows[r][static_cast<std::size_t>(c + 1)]);
    }
  }
  m.vocabulary = NodeVocabulary::from_kinds(kinds);
  m.output_vectors = Eigen::MatrixXd::Zero(m.input_vectors.rows(), dim);
  m.config.embedding_dim = static_cast<int>(dim);
  return m;
}

}  // namespace perfimpact
