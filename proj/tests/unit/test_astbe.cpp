#include <cmath>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "perfimpact/astbe.hpp"
#include "perfimpact/errors.hpp"
#include "perfimpact/java_parser.hpp"
#include "perfimpact/pipeline.hpp"
#include "perfimpact/random.hpp"
#include "util.hpp"

using namespace perfimpact;
using namespace perfimpact::testing;

namespace {

std::vector<Ast> fixture_asts() {
  std::vector<Ast> asts;
  for (const auto& f : load_java_files(fixture("corpus"))) asts.push_back(parse_java(f.text, f.path));
  return asts;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

Eigen::VectorXd row_of(const EmbeddingMatrix& m, NodeKind k) {
  return m.input_vectors.row(static_cast<Eigen::Index>(*m.vocabulary.index_of(k))).transpose();
}

double rel_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

// Worst relative error between cbow_gradient and central differences.
double gradient_check(std::uint64_t seed) {
  Rng rng(seed);
  const int v = 3, d = 4;
  Eigen::MatrixXd in(v, d), out(v, d);
  for (int i = 0; i < v; ++i) {
    for (int j = 0; j < d; ++j) {
      in(i, j) = rng.uniform(-1, 1);
      out(i, j) = rng.uniform(-1, 1);
    }
  }
  CbowExample ex;
  ex.context = {rng.below(3), rng.below(3)};
  ex.center = rng.below(3);
  ex.negatives = {rng.below(3), rng.below(3), rng.below(3)};
  const CbowGradient g = cbow_gradient(in, out, ex);
  CHECK(g.loss == doctest::Approx(cbow_loss(in, out, ex)));

  const double h = 1e-6;
  double worst = 0.0;
  for (int i = 0; i < v; ++i) {
    for (int j = 0; j < d; ++j) {
      Eigen::MatrixXd p = in, m = in;
      p(i, j) += h;
      m(i, j) -= h;
      worst = std::max(worst, rel_error(g.d_input(i, j),
                                        (cbow_loss(p, out, ex) - cbow_loss(m, out, ex)) / (2 * h)));
      p = out;
      m = out;
      p(i, j) += h;
      m(i, j) -= h;
      worst = std::max(worst, rel_error(g.d_output(i, j),
                                        (cbow_loss(in, p, ex) - cbow_loss(in, m, ex)) / (2 * h)));
    }
  }
  return worst;
}

}  // namespace

TEST_SUITE("astbe") {

TEST_CASE("selected kinds") {
  CHECK(selected_node_kinds().size() == 14);
  CHECK_FALSE(selected_node_kinds().contains(NodeKind::ClassDeclaration));
  CHECK(selected_node_kinds().contains(NodeKind::MethodCall));
}

TEST_CASE("build_corpus examples") {
  const std::vector<Ast> asts = {parse_java(read_file(fixture("java/Guard.java"))),
                                 parse_java("class A {}")};
  const NodeCorpus corpus = build_corpus(asts);
  REQUIRE(corpus.sequences.size() == 2);
  const auto& seq = corpus.sequences[0];
  auto pos = [&](NodeKind k) { return std::find(seq.begin(), seq.end(), k) - seq.begin(); };
  const auto method = pos(NodeKind::MethodDeclaration);
  const auto iff = pos(NodeKind::IfStatement);
  CHECK(method < iff);
  CHECK(std::count(seq.begin() + iff, seq.end(), NodeKind::ReturnStatement) == 2);
  CHECK(corpus.sequences[1].empty());
  CHECK(corpus.empty == std::vector<std::size_t>{1});
}

TEST_CASE("build_corpus equals a filtered reference traversal") {
  const auto asts = fixture_asts();
  const NodeCorpus corpus = build_corpus(asts);
  for (std::size_t i = 0; i < asts.size(); ++i) {
    NodeSequence oracle;
    std::function<void(const AstNode&)> walk = [&](const AstNode& n) {
      if (selected_node_kinds().contains(n.kind)) oracle.push_back(n.kind);
      for (const auto& c : n.children) walk(c);
    };
    walk(asts[i].root());
    CHECK(corpus.sequences[i] == oracle);
  }
}

TEST_CASE("vocabulary is a bijection in catalog order") {
  const std::vector<NodeSequence> corpus = {
      {NodeKind::Literal, NodeKind::IfStatement}, {NodeKind::MethodCall, NodeKind::Literal}};
  const auto vocab = NodeVocabulary::from_corpus(corpus);
  CHECK(vocab.kinds() ==
        std::vector<NodeKind>{NodeKind::IfStatement, NodeKind::MethodCall, NodeKind::Literal});
  for (std::size_t i = 0; i < vocab.size(); ++i) CHECK(vocab.index_of(vocab.kinds()[i]) == i);
  CHECK_FALSE(vocab.index_of(NodeKind::DoStatement).has_value());
}

TEST_CASE("config validation") {
  CbowConfig c;
  CHECK_NOTHROW(c.validate());
  c.embedding_dim = 1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.learning_rate = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("degenerate and empty corpora") {
  const std::vector<NodeSequence> one = {{NodeKind::Literal, NodeKind::Literal}};
  const EmbeddingMatrix m = train_cbow(one, {});
  CHECK(m.input_vectors.rows() == 1);
  CHECK(m.input_vectors.allFinite());
  REQUIRE(m.warnings.size() == 1);
  CHECK(m.warnings[0].rfind("DegenerateVocabulary", 0) == 0);
  for (double l : m.epoch_loss) CHECK(std::isfinite(l));

  const std::vector<NodeSequence> none = {{}, {}};
  CHECK_THROWS_AS(train_cbow(none, {}), EmptyCorpus);
}

TEST_CASE("gradient matches central differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    CHECK(gradient_check(seed) < 1e-4);
  }
}

TEST_CASE("training is deterministic and finite") {
  const NodeCorpus corpus = build_corpus(fixture_asts());
  CbowConfig cfg;
  cfg.seed = 42;
  const EmbeddingMatrix a = train_cbow(corpus.sequences, cfg);
  const EmbeddingMatrix b = train_cbow(corpus.sequences, cfg);
  CHECK(a.input_vectors == b.input_vectors);
  CHECK(a.output_vectors == b.output_vectors);
  CHECK(a.epoch_loss == b.epoch_loss);
  CHECK(a.input_vectors.allFinite());
  CHECK(a.output_vectors.allFinite());
  CHECK(a.input_vectors.rows() == static_cast<Eigen::Index>(a.vocabulary.size()));
  CHECK(a.epoch_loss.size() == 50);
  cfg.seed = 43;
  CHECK(train_cbow(corpus.sequences, cfg).input_vectors != a.input_vectors);
}

TEST_CASE("epoch loss does not rise between consecutive 5-epoch windows") {
  const NodeCorpus corpus = build_corpus(fixture_asts());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CbowConfig cfg;
    cfg.seed = seed;
    const auto loss = train_cbow(corpus.sequences, cfg).epoch_loss;
    std::vector<double> windows;
    for (std::size_t e = 0; e + 5 <= loss.size(); e += 5) {
      windows.push_back((loss[e] + loss[e + 1] + loss[e + 2] + loss[e + 3] + loss[e + 4]) / 5);
    }
    CAPTURE(seed);
    for (std::size_t w = 1; w < windows.size(); ++w) CHECK(windows[w] <= windows[w - 1]);
    CHECK(loss.back() < loss.front());
  }
}

TEST_CASE("kinds sharing contexts end up closer") {
  // A and B both sit between L and I; C sits between M and R.
  const NodeKind A = NodeKind::IfStatement, B = NodeKind::WhileStatement,
                 C = NodeKind::ForStatement, L = NodeKind::Literal, I = NodeKind::Identifier,
                 M = NodeKind::MethodCall, R = NodeKind::ReturnStatement;
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 100);
    std::vector<NodeSequence> corpus;
    for (int s = 0; s < 40; ++s) {
      NodeSequence seq;
      for (int t = 0; t < 15; ++t) {
        switch (rng.below(3)) {
          case 0: seq.insert(seq.end(), {L, A, I}); break;
          case 1: seq.insert(seq.end(), {L, B, I}); break;
          default: seq.insert(seq.end(), {M, C, R}); break;
        }
      }
      corpus.push_back(std::move(seq));
    }
    CbowConfig cfg;
    cfg.seed = seed;
    const EmbeddingMatrix m = train_cbow(corpus, cfg);
    if (cosine(row_of(m, A), row_of(m, B)) > cosine(row_of(m, A), row_of(m, C))) ++wins;
  }
  CHECK(wins >= 9);
}

TEST_CASE("embed_file means") {
  EmbeddingMatrix m;
  const std::vector<NodeKind> kinds = {NodeKind::MethodDeclaration, NodeKind::ReturnStatement,
                                       NodeKind::Literal};
  m.vocabulary = NodeVocabulary::from_kinds(kinds);
  m.input_vectors.resize(3, 2);
  m.input_vectors << 1, 2, 3, 5, -1, 7;
  m.output_vectors = Eigen::MatrixXd::Zero(3, 2);

  // One method, one return, one literal (identifiers are out of vocabulary).
  const Ast ast = parse_java("class A { int m() { return 1; } }");
  const FileEmbedding e = embed_file(ast, m);
  CHECK_FALSE(e.warning.has_value());
  // BlockStatement and nothing else is skipped; the mean is over known kinds.
  CHECK(e.values(0) == doctest::Approx((1 + 3 - 1) / 3.0));
  CHECK(e.values(1) == doctest::Approx((2 + 5 + 7) / 3.0));

  const std::vector<NodeKind> same = {NodeKind::Literal, NodeKind::Literal, NodeKind::Literal};
  CHECK(embed_sequence(same, m) == Eigen::Vector2d(-1, 7));
  const std::vector<NodeKind> two = {NodeKind::MethodDeclaration, NodeKind::ReturnStatement};
  CHECK(embed_sequence(two, m).isApprox(Eigen::Vector2d(2, 3.5)));

  const FileEmbedding empty = embed_file(parse_java("class A {}"), m);
  CHECK(empty.values == Eigen::Vector2d::Zero());
  CHECK(empty.warning.has_value());
}

TEST_CASE("property: embedding ignores sequence order") {
  const auto asts = fixture_asts();
  const NodeCorpus corpus = build_corpus(asts);
  const EmbeddingMatrix m = train_cbow(corpus.sequences, {});
  Rng rng(9);
  for (const auto& seq : corpus.sequences) {
    NodeSequence shuffled = seq;
    rng.shuffle(std::span<NodeKind>(shuffled));
    CHECK(embed_sequence(shuffled, m).isApprox(embed_sequence(seq, m), 1e-12));
  }
  for (const auto& ast : asts) CHECK(embed_file(ast, m).values.allFinite());
}

TEST_CASE("embedding csv round trip") {
  const EmbeddingMatrix m = train_cbow(build_corpus(fixture_asts()).sequences, {});
  std::stringstream ss;
  write_embedding_csv(m, ss);
  const std::string text = ss.str();
  CHECK(text.rfind("kind,dim_0,dim_1,", 0) == 0);
  const EmbeddingMatrix back = read_embedding_csv(ss);
  CHECK(back.vocabulary.kinds() == m.vocabulary.kinds());
  CHECK(back.input_vectors.isApprox(m.input_vectors, 1e-8));
  std::stringstream bad("kind,dim_0\nNotAKind,1\n");
  CHECK_THROWS_AS(read_embedding_csv(bad), SchemaMismatch);
}

}  // TEST_SUITE
