#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace perfimpact {

struct FoldPlan;

enum class ModelKind { Linear, Sgd, Ridge, Lasso, DecisionTree, RandomForest };

inline constexpr std::array<ModelKind, 6> kAllModelKinds = {
    ModelKind::Linear, ModelKind::Sgd,          ModelKind::Ridge,
    ModelKind::Lasso,  ModelKind::DecisionTree, ModelKind::RandomForest};

std::string_view model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(std::string_view name);  // throws InvalidArgument

// Hyperparameters by name. Unset names take the defaults:
//   ridge alpha 1.0; lasso alpha 0.1, tolerance 1e-6, max_sweeps 1000;
//   sgd learning_rate 0.01, epochs 200; decision_tree max_depth 4,
//   min_samples_leaf 1; random_forest n_trees 100, max_depth 2,
//   min_samples_leaf 1, features_per_split 0 (= max(1, ceil(p/3))),
//   bootstrap 1. A negative max_depth means unlimited.
struct ModelSpec {
  ModelKind kind = ModelKind::Linear;
  std::map<std::string, double> hyperparams;
  std::uint64_t seed = 0;

  double param(const std::string& name) const;  // throws InvalidArgument
  ModelSpec& set(const std::string& name, double value) {
    hyperparams[name] = value;
    return *this;
  }
};

ModelSpec default_spec(ModelKind kind, std::uint64_t seed = 0);

// Per-feature mean and population SD; zero SDs are replaced by 1.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean target of the training rows reaching the node

  bool leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int depth() const;
};

class TrainedModel {
 public:
  ModelSpec spec;
  Eigen::Index n_features = 0;
  std::optional<Standardizer> standardizer;  // sgd, ridge, lasso
  Eigen::VectorXd coefficients;              // linear kinds, in standardized units if scaled
  double intercept = 0.0;
  std::vector<RegressionTree> trees;         // one for decision_tree
  std::vector<std::string> feature_names;    // informational
  std::map<std::string, std::string> metadata;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;  // throws DimensionMismatch
  // Slopes and intercept in the original feature units (linear kinds only).
  Eigen::VectorXd raw_coefficients() const;
  double raw_intercept() const;
};

// Throws DimensionMismatch, NonFiniteInput, InvalidArgument (n < 2, p < 1).
TrainedModel fit(const ModelSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Plain-text, line-oriented: "perfimpact-model 1", then key/value lines
// (kind, seed, param, features, name, meta, mean, scale, coef, intercept),
// then one "tree" block per tree. Numbers round-trip exactly.
void save_model(const TrainedModel& model, std::ostream& out);
TrainedModel load_model(std::istream& in);  // throws ModelFormatError

// Squared loss used by sgd: (1/2n) sum (b + z_i.w - y_i)^2 and its gradient.
double sgd_loss(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                double b);
std::pair<Eigen::VectorXd, double> sgd_gradient(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                                const Eigen::VectorXd& w, double b);

// (1/n) sum |actual - predicted|. Throws LengthMismatch; InvalidArgument when empty.
double mae(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted);

struct ModelEvaluation {
  ModelKind kind = ModelKind::Linear;
  std::vector<double> fold_mae;
  double mean_mae_seconds = 0.0;
  double relative_mae_percent = 0.0;  // NaN when the mean target is not positive
};

// Errors from fitting are rethrown with the fold index in the message.
ModelEvaluation cross_validate(const ModelSpec& spec, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, const FoldPlan& plan);

}  // namespace perfimpact
