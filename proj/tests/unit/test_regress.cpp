#include <cmath>
#include <sstream>

#include "doctest.h"
#include "perfimpact/dataset.hpp"
#include "perfimpact/errors.hpp"
#include "perfimpact/random.hpp"
#include "perfimpact/regress.hpp"

using namespace perfimpact;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Rng& rng, int n, int p) {
  MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = rng.uniform(-3, 3);
  }
  return X;
}

VectorXd noisy_linear(Rng& rng, const MatrixXd& X) {
  VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    y(i) = 1.0 + 0.5 * X(i, 0) - 2.0 * X(i, X.cols() - 1) + 0.1 * rng.normal();
  }
  return y;
}

// Brute-force MAE oracle, deliberately written without Eigen.
double mae_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST_SUITE("regress") {

TEST_CASE("kind names and defaults") {
  for (ModelKind k : kAllModelKinds) CHECK(model_kind_from_name(model_kind_name(k)) == k);
  CHECK(model_kind_name(ModelKind::RandomForest) == "random_forest");
  CHECK_THROWS_AS(model_kind_from_name("svm"), InvalidArgument);
  CHECK(default_spec(ModelKind::Ridge).param("alpha") == 1.0);
  CHECK(default_spec(ModelKind::Lasso).param("alpha") == 0.1);
  CHECK(default_spec(ModelKind::Sgd).param("learning_rate") == 0.01);
  CHECK(default_spec(ModelKind::Sgd).param("epochs") == 200);
  CHECK(default_spec(ModelKind::DecisionTree).param("max_depth") == 4);
  CHECK(default_spec(ModelKind::RandomForest).param("n_trees") == 100);
  CHECK(default_spec(ModelKind::RandomForest).param("max_depth") == 2);
  CHECK_THROWS_AS(default_spec(ModelKind::Linear).param("alpha"), InvalidArgument);
}

TEST_CASE("mae examples and oracle") {
  CHECK(mae(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 2, 3)) == 0.0);
  CHECK(mae(Eigen::Vector2d(1, 3), Eigen::Vector2d(2, 2)) == 1.0);
  CHECK_THROWS_AS(mae(Eigen::Vector2d(1, 3), Eigen::Vector3d(2, 2, 2)), LengthMismatch);
  CHECK_THROWS_AS(mae(VectorXd(), VectorXd()), InvalidArgument);

  Rng rng(11);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> a(100), b(100), c(100);
    for (std::size_t i = 0; i < 100; ++i) {
      a[i] = rng.uniform(-100, 100);
      b[i] = rng.uniform(-100, 100);
      c[i] = rng.uniform(-100, 100);
    }
    const VectorXd A = to_eigen(a), B = to_eigen(b), C = to_eigen(c);
    const double m = mae(A, B);
    CHECK(std::abs(m - mae_oracle(a, b)) <= 1e-12);
    CHECK(mae(A, A) == 0.0);
    CHECK(m >= 0.0);
    CHECK(std::abs(m - mae(B, A)) <= 1e-12);
    CHECK(mae(A, C) <= mae(A, B) + mae(B, C) + 1e-12);
    const double delta = rng.uniform(-5, 5);
    CHECK(std::abs(mae(A, (B.array() + delta).matrix()) - m) <= std::abs(delta) + 1e-12);
  }
}

TEST_CASE("linear recovers a noiseless line") {
  MatrixXd X(50, 1);
  VectorXd y(50);
  for (int i = 0; i < 50; ++i) {
    X(i, 0) = 0.37 * i - 4.0;
    y(i) = 2.0 * X(i, 0) + 3.0;
  }
  const TrainedModel m = fit(default_spec(ModelKind::Linear), X, y);
  CHECK(std::abs(m.raw_coefficients()(0) - 2.0) < 1e-6);
  CHECK(std::abs(m.raw_intercept() - 3.0) < 1e-6);
  CHECK(mae(y, m.predict(X)) < 1e-6);
}

TEST_CASE("linear residuals are orthogonal to the columns") {
  Rng rng(5);
  const MatrixXd X = random_matrix(rng, 60, 4);
  const VectorXd y = noisy_linear(rng, X);
  const TrainedModel m = fit(default_spec(ModelKind::Linear), X, y);
  const VectorXd r = y - m.predict(X);
  CHECK(std::abs(r.sum()) < 1e-6);
  for (int j = 0; j < 4; ++j) CHECK(std::abs(X.col(j).dot(r)) < 1e-6);
  CHECK(m.predict(X.topRows(1)).size() == 1);
}

TEST_CASE("linear survives a singular design") {
  Rng rng(6);
  MatrixXd X = random_matrix(rng, 30, 3);
  X.col(2) = 2.0 * X.col(0);
  const VectorXd y = noisy_linear(rng, X);
  const TrainedModel m = fit(default_spec(ModelKind::Linear), X, y);
  CHECK(m.predict(X).allFinite());
  CHECK(mae(y, m.predict(X)) < 0.2);
}

TEST_CASE("constant targets give constant predictions") {
  Rng rng(1);
  const MatrixXd X = random_matrix(rng, 20, 3);
  const VectorXd y = VectorXd::Constant(20, 7.25);
  const MatrixXd probe = random_matrix(rng, 5, 3);
  for (ModelKind k : kAllModelKinds) {
    CAPTURE(model_kind_name(k));
    const VectorXd p = fit(default_spec(k), X, y).predict(probe);
    for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p(i) == doctest::Approx(7.25).epsilon(1e-9));
  }
}

TEST_CASE("ridge approaches OLS as alpha vanishes") {
  Rng rng(9);
  const MatrixXd X = random_matrix(rng, 80, 3);
  const VectorXd y = noisy_linear(rng, X);
  const TrainedModel ols = fit(default_spec(ModelKind::Linear), X, y);
  const TrainedModel ridge = fit(default_spec(ModelKind::Ridge).set("alpha", 1e-10), X, y);
  CHECK((ridge.raw_coefficients() - ols.raw_coefficients()).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(std::abs(ridge.raw_intercept() - ols.raw_intercept()) < 1e-4);

  // Heavier penalty shrinks the standardized slopes.
  const TrainedModel shrunk = fit(default_spec(ModelKind::Ridge).set("alpha", 100.0), X, y);
  CHECK(shrunk.coefficients.norm() < ridge.coefficients.norm());
}

TEST_CASE("lasso zeroes every slope under a large penalty") {
  Rng rng(10);
  const MatrixXd X = random_matrix(rng, 40, 5);
  const VectorXd y = noisy_linear(rng, X);
  const Standardizer s = Standardizer::fit(X);
  const MatrixXd Z = s.apply(X);
  const VectorXd yc = y.array() - y.mean();
  const double alpha = 10.0 * (Z.transpose() * yc).cwiseAbs().maxCoeff() / 40.0;
  const TrainedModel m = fit(default_spec(ModelKind::Lasso).set("alpha", alpha), X, y);
  for (Eigen::Index j = 0; j < m.coefficients.size(); ++j) CHECK(m.coefficients(j) == 0.0);
  CHECK(m.intercept == doctest::Approx(y.mean()));

  const TrainedModel loose = fit(default_spec(ModelKind::Lasso).set("alpha", 1e-3), X, y);
  CHECK(loose.coefficients.cwiseAbs().maxCoeff() > 0.5);
}

TEST_CASE("unbounded tree fits distinct inputs exactly") {
  Rng rng(12);
  const MatrixXd X = random_matrix(rng, 100, 3);
  VectorXd y(100);
  for (int i = 0; i < 100; ++i) y(i) = std::sin(X(i, 0)) + X(i, 1) * X(i, 2);
  const TrainedModel m = fit(default_spec(ModelKind::DecisionTree).set("max_depth", -1), X, y);
  CHECK(mae(y, m.predict(X)) == 0.0);
  const TrainedModel shallow = fit(default_spec(ModelKind::DecisionTree), X, y);
  REQUIRE(shallow.trees.size() == 1);
  CHECK(shallow.trees[0].depth() <= 4);
}

TEST_CASE("min_samples_leaf is respected") {
  Rng rng(13);
  const MatrixXd X = random_matrix(rng, 50, 2);
  const VectorXd y = noisy_linear(rng, X);
  const TrainedModel m = fit(
      default_spec(ModelKind::DecisionTree).set("max_depth", -1).set("min_samples_leaf", 5), X, y);
  std::map<const TreeNode*, int> leaf_rows;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto& nodes = m.trees[0].nodes;
    const TreeNode* n = &nodes[0];
    while (!n->leaf()) n = &nodes[static_cast<std::size_t>(X(i, n->feature) <= n->threshold ? n->left : n->right)];
    ++leaf_rows[n];
  }
  for (const auto& [leaf, rows] : leaf_rows) CHECK(rows >= 5);
}

TEST_CASE("forest stays in the target range and averages its trees") {
  Rng rng(14);
  const MatrixXd X = random_matrix(rng, 80, 6);
  VectorXd y(80);
  for (int i = 0; i < 80; ++i) y(i) = 1.0 + 4.0 / (1.0 + std::exp(-X(i, 0) - X(i, 3)));
  const TrainedModel m = fit(default_spec(ModelKind::RandomForest, 3), X, y);
  CHECK(m.trees.size() == 100);
  for (const auto& t : m.trees) CHECK(t.depth() <= 2);
  const MatrixXd probe = random_matrix(rng, 200, 6) * 3.0;
  const VectorXd p = m.predict(probe);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    CHECK(p(i) >= y.minCoeff());
    CHECK(p(i) <= y.maxCoeff());
    double mean = 0.0;
    for (const auto& t : m.trees) mean += t.predict(probe.row(i));
    mean /= static_cast<double>(m.trees.size());
    CHECK(p(i) == doctest::Approx(mean).epsilon(1e-12));
  }
  const TrainedModel again = fit(default_spec(ModelKind::RandomForest, 3), X, y);
  CHECK(again.predict(probe) == p);
  CHECK(fit(default_spec(ModelKind::RandomForest, 4), X, y).predict(probe) != p);
}

TEST_CASE("sgd gradient matches central differences") {
  Rng rng(15);
  for (int t = 0; t < 20; ++t) {
    const MatrixXd Z = random_matrix(rng, 3, 2);
    const VectorXd y = VectorXd::NullaryExpr(3, [&] { return rng.uniform(-2, 2); });
    const VectorXd w = VectorXd::NullaryExpr(2, [&] { return rng.uniform(-1, 1); });
    const double b = rng.uniform(-1, 1);
    const auto [gw, gb] = sgd_gradient(Z, y, w, b);
    const double h = 1e-6;
    auto rel = [](double a, double n) {
      return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
    };
    for (int j = 0; j < 2; ++j) {
      VectorXd wp = w, wm = w;
      wp(j) += h;
      wm(j) -= h;
      CHECK(rel(gw(j), (sgd_loss(Z, y, wp, b) - sgd_loss(Z, y, wm, b)) / (2 * h)) <= 1e-5);
    }
    CHECK(rel(gb, (sgd_loss(Z, y, w, b + h) - sgd_loss(Z, y, w, b - h)) / (2 * h)) <= 1e-5);
  }
}

TEST_CASE("sgd approaches the least-squares fit") {
  Rng rng(16);
  const MatrixXd X = random_matrix(rng, 100, 3);
  const VectorXd y = noisy_linear(rng, X);
  const TrainedModel sgd = fit(default_spec(ModelKind::Sgd, 1), X, y);
  const TrainedModel ols = fit(default_spec(ModelKind::Linear), X, y);
  CHECK(mae(sgd.predict(X), ols.predict(X)) < 0.05);
  CHECK(fit(default_spec(ModelKind::Sgd, 1), X, y).predict(X) == sgd.predict(X));
}

TEST_CASE("input validation") {
  Rng rng(17);
  MatrixXd X = random_matrix(rng, 10, 2);
  VectorXd y = noisy_linear(rng, X);
  CHECK_THROWS_AS(fit(default_spec(ModelKind::Linear), X, y.head(9)), DimensionMismatch);
  X(3, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(fit(default_spec(ModelKind::Ridge), X, y), NonFiniteInput);
  CHECK_THROWS_AS(fit(default_spec(ModelKind::Ridge), X.topRows(1), y.head(1)), InvalidArgument);
  X(3, 1) = 0.0;
  const TrainedModel m = fit(default_spec(ModelKind::DecisionTree), X, y);
  CHECK_THROWS_AS(m.predict(MatrixXd::Zero(2, 3)), DimensionMismatch);
}

TEST_CASE("cross-validation on a hand-solved dataset") {
  MatrixXd X(4, 1);
  X << 0, 1, 2, 3;
  VectorXd y(4);
  y << 1, 3, 2, 5;
  FoldPlan plan;
  plan.k = 2;
  plan.assignments = {0, 1, 0, 1};
  // Fold 0 trains on (1,3),(3,5): y = x + 2, errors 1 and 2.
  // Fold 1 trains on (0,1),(2,2): y = x/2 + 1, errors 1.5 and 2.5.
  const ModelEvaluation e = cross_validate(default_spec(ModelKind::Linear), X, y, plan);
  REQUIRE(e.fold_mae.size() == 2);
  CHECK(e.fold_mae[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(e.fold_mae[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(e.mean_mae_seconds == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(e.relative_mae_percent == doctest::Approx(1.75 / 2.75 * 100).epsilon(1e-12));

  const VectorXd zero = VectorXd::Zero(4);
  CHECK(std::isnan(cross_validate(default_spec(ModelKind::Linear), X, zero, plan).relative_mae_percent));
}

TEST_CASE("cross-validation of a constant target") {
  Rng rng(18);
  const MatrixXd X = random_matrix(rng, 30, 2);
  const VectorXd y = VectorXd::Constant(30, 4.0);
  const std::vector<double> yt(30, 4.0);
  const FoldPlan plan = kfold_stratified(yt, 5, 0);
  for (ModelKind k : kAllModelKinds) {
    const ModelEvaluation e = cross_validate(default_spec(k), X, y, plan);
    CHECK(e.mean_mae_seconds == doctest::Approx(0.0));
    CHECK(cross_validate(default_spec(k), X, y, plan).fold_mae == e.fold_mae);
  }
}

TEST_CASE("fold errors name the fold") {
  MatrixXd X(4, 1);
  X << 0, 1, 2, 3;
  const VectorXd y = VectorXd::LinSpaced(4, 0, 3);
  FoldPlan plan;
  plan.k = 2;
  plan.assignments = {0, 0, 0, 1};  // fold 0 leaves a single training row
  try {
    cross_validate(default_spec(ModelKind::Linear), X, y, plan);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.name() == "InvalidArgument");
    CHECK(std::string(e.what()).find("fold 0") != std::string::npos);
  }
}

TEST_CASE("model files round-trip exactly") {
  Rng rng(19);
  const MatrixXd X = random_matrix(rng, 40, 3);
  const VectorXd y = noisy_linear(rng, X);
  const MatrixXd probe = random_matrix(rng, 10, 3);
  for (ModelKind k : kAllModelKinds) {
    CAPTURE(model_kind_name(k));
    TrainedModel m = fit(default_spec(k, 2), X, y);
    m.feature_names = {"a", "b", "c d"};
    m.metadata["baseline_test_seconds"] = "12.5";
    std::stringstream ss;
    save_model(m, ss);
    const TrainedModel back = load_model(ss);
    CHECK(back.predict(probe) == m.predict(probe));
    CHECK(back.feature_names == m.feature_names);
    CHECK(back.metadata == m.metadata);
    CHECK(back.spec.kind == k);
  }
  std::stringstream bad("perfimpact-model 1\nkind linear\ncoef 1 2\n");
  CHECK_THROWS_AS(load_model(bad), ModelFormatError);
  std::stringstream wrong("not a model\n");
  CHECK_THROWS_AS(load_model(wrong), ModelFormatError);
}

}  // TEST_SUITE
