#include "perfimpact/regress.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "perfimpact/csv.hpp"
#include "perfimpact/dataset.hpp"
#include "perfimpact/errors.hpp"
#include "perfimpact/random.hpp"

namespace perfimpact {

namespace {

constexpr double kRidgeFallback = 1e-8;

const std::map<std::string, double>& defaults_for(ModelKind kind) {
  static const std::map<std::string, double> linear = {};
  static const std::map<std::string, double> sgd = {{"learning_rate", 0.01}, {"epochs", 200}};
  static const std::map<std::string, double> ridge = {{"alpha", 1.0}};
  static const std::map<std::string, double> lasso = {
      {"alpha", 0.1}, {"tolerance", 1e-6}, {"max_sweeps", 1000}};
  static const std::map<std::string, double> tree = {{"max_depth", 4}, {"min_samples_leaf", 1}};
  static const std::map<std::string, double> forest = {{"n_trees", 100},
                                                       {"max_depth", 2},
                                                       {"min_samples_leaf", 1},
                                                       {"features_per_split", 0},
                                                       {"bootstrap", 1}};
  switch (kind) {
    case ModelKind::Linear: return linear;
    case ModelKind::Sgd: return sgd;
    case ModelKind::Ridge: return ridge;
    case ModelKind::Lasso: return lasso;
    case ModelKind::DecisionTree: return tree;
    case ModelKind::RandomForest: return forest;
  }
  return linear;
}

bool uses_scaling(ModelKind kind) {
  return kind == ModelKind::Sgd || kind == ModelKind::Ridge || kind == ModelKind::Lasso;
}

double soft_threshold(double rho, double alpha) {
  if (rho > alpha) return rho - alpha;
  if (rho < -alpha) return rho + alpha;
  return 0.0;
}

Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& Xc, const Eigen::VectorXd& yc) {
  const Eigen::MatrixXd gram = Xc.transpose() * Xc;
  const Eigen::VectorXd rhs = Xc.transpose() * yc;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive();
  if (!singular) {
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    singular = d.maxCoeff() == 0.0 || d.minCoeff() <= 1e-12 * d.maxCoeff();
  }
  if (singular) {
    const Eigen::MatrixXd regularized =
        gram + kRidgeFallback * Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    return regularized.ldlt().solve(rhs);
  }
  return ldlt.solve(rhs);
}

struct TreeParams {
  int max_depth = -1;
  std::size_t min_leaf = 1;
  std::size_t features_per_split = 0;  // 0 = all, in column order
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, TreeParams params, Rng* rng)
      : X_(X), y_(y), params_(params), rng_(rng) {}

  RegressionTree build(std::vector<Eigen::Index> rows) {
    tree_.nodes.clear();
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<Eigen::Index>& rows, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index r : rows) {
      sum += y_(r);
      lo = std::min(lo, y_(r));
      hi = std::max(hi, y_(r));
    }
    tree_.nodes[index].value = sum / static_cast<double>(rows.size());

    const bool depth_left = params_.max_depth < 0 || depth < params_.max_depth;
    if (!depth_left || lo == hi || rows.size() < 2 * params_.min_leaf) return index;

    const Split best = find_split(rows, sum);
    if (best.feature < 0) return index;

    std::vector<Eigen::Index> left, right;
    for (Eigen::Index r : rows) {
      (X_(r, best.feature) <= best.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    TreeNode& node = tree_.nodes[index];
    node.feature = static_cast<int>(best.feature);
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  struct Split {
    Eigen::Index feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  std::vector<Eigen::Index> candidate_features() {
    const Eigen::Index p = X_.cols();
    std::vector<Eigen::Index> features(static_cast<std::size_t>(p));
    std::iota(features.begin(), features.end(), 0);
    const std::size_t m = params_.features_per_split;
    if (m == 0 || m >= features.size() || !rng_) return features;
    // Partial Fisher-Yates: the first m entries are a uniform subset.
    for (std::size_t i = 0; i < m; ++i) {
      std::swap(features[i], features[i + rng_->below(features.size() - i)]);
    }
    features.resize(m);
    return features;
  }

  Split find_split(const std::vector<Eigen::Index>& rows, double total) {
    const std::size_t n = rows.size();
    Split best;
    std::vector<Eigen::Index> sorted = rows;
    for (Eigen::Index f : candidate_features()) {
      std::sort(sorted.begin(), sorted.end(), [&](Eigen::Index a, Eigen::Index b) {
        return X_(a, f) < X_(b, f) || (X_(a, f) == X_(b, f) && a < b);
      });
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += y_(sorted[i]);
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        const double x = X_(sorted[i], f);
        const double x_next = X_(sorted[i + 1], f);
        if (x == x_next || nl < params_.min_leaf || nr < params_.min_leaf) continue;
        // SSE reduction of the split: nl*nr/n * (mean_l - mean_r)^2.
        const double diff = left_sum / static_cast<double>(nl) -
                            (total - left_sum) / static_cast<double>(nr);
        const double gain =
            static_cast<double>(nl) * static_cast<double>(nr) / static_cast<double>(n) * diff * diff;
        if (gain > best.gain) {
          double threshold = x + (x_next - x) / 2.0;
          if (!(threshold < x_next) || threshold < x) threshold = x;
          best = {f, threshold, gain};
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  TreeParams params_;
  Rng* rng_;
  RegressionTree tree_;
};

TreeParams tree_params(const ModelSpec& spec, Eigen::Index p) {
  TreeParams t;
  const double depth = spec.param("max_depth");
  t.max_depth = depth < 0 || !std::isfinite(depth) ? -1 : static_cast<int>(depth);
  const double leaf = spec.param("min_samples_leaf");
  if (leaf < 1) throw InvalidArgument("min_samples_leaf must be >= 1");
  t.min_leaf = static_cast<std::size_t>(leaf);
  if (spec.kind == ModelKind::RandomForest) {
    const double m = spec.param("features_per_split");
    t.features_per_split = m > 0 ? static_cast<std::size_t>(m)
                                 : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(
                                                                static_cast<double>(p) / 3.0)));
  }
  return t;
}

void check_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) {
    throw DimensionMismatch("X has " + std::to_string(X.rows()) + " rows, y has " +
                            std::to_string(y.size()));
  }
  if (X.rows() < 2) throw InvalidArgument("fit needs at least 2 rows");
  if (X.cols() < 1) throw InvalidArgument("fit needs at least 1 feature");
  if (!X.allFinite() || !y.allFinite()) throw NonFiniteInput("fit input contains NaN or inf");
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Linear: return "linear";
    case ModelKind::Sgd: return "sgd";
    case ModelKind::Ridge: return "ridge";
    case ModelKind::Lasso: return "lasso";
    case ModelKind::DecisionTree: return "decision_tree";
    case ModelKind::RandomForest: return "random_forest";
  }
  return "?";
}

ModelKind model_kind_from_name(std::string_view name) {
  for (ModelKind k : kAllModelKinds) {
    if (model_kind_name(k) == name) return k;
  }
  throw InvalidArgument("unknown model kind '" + std::string(name) + "'");
}

double ModelSpec::param(const std::string& name) const {
  if (auto it = hyperparams.find(name); it != hyperparams.end()) return it->second;
  const auto& defaults = defaults_for(kind);
  if (auto it = defaults.find(name); it != defaults.end()) return it->second;
  throw InvalidArgument(std::string(model_kind_name(kind)) + " has no hyperparameter '" + name + "'");
}

ModelSpec default_spec(ModelKind kind, std::uint64_t seed) { return ModelSpec{kind, {}, seed}; }

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  s.mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - s.mean;
  s.scale = (centered.colwise().squaredNorm() / static_cast<double>(X.rows())).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  return (X.rowwise() - mean).array().rowwise() / scale.array();
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].leaf()) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = x(n.feature) <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

int RegressionTree::depth() const {
  std::vector<std::pair<int, int>> stack = {{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    if (!n.leaf()) {
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  return deepest;
}

Eigen::VectorXd TrainedModel::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features) {
    throw DimensionMismatch("model expects " + std::to_string(n_features) + " features, got " +
                            std::to_string(X.cols()));
  }
  Eigen::VectorXd out(X.rows());
  switch (spec.kind) {
    case ModelKind::DecisionTree:
    case ModelKind::RandomForest:
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double sum = 0.0;
        for (const auto& t : trees) sum += t.predict(X.row(i));
        out(i) = sum / static_cast<double>(trees.size());
      }
      return out;
    default: {
      const Eigen::MatrixXd Z = standardizer ? standardizer->apply(X) : X;
      out = (Z * coefficients).array() + intercept;
      return out;
    }
  }
}

Eigen::VectorXd TrainedModel::raw_coefficients() const {
  if (!standardizer) return coefficients;
  return coefficients.array() / standardizer->scale.transpose().array();
}

double TrainedModel::raw_intercept() const {
  if (!standardizer) return intercept;
  return intercept - standardizer->mean.dot(raw_coefficients());
}

double sgd_loss(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                double b) {
  const Eigen::VectorXd r = (Z * w).array() + b - y.array();
  return r.squaredNorm() / (2.0 * static_cast<double>(Z.rows()));
}

std::pair<Eigen::VectorXd, double> sgd_gradient(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                                const Eigen::VectorXd& w, double b) {
  const double n = static_cast<double>(Z.rows());
  const Eigen::VectorXd r = (Z * w).array() + b - y.array();
  return {Z.transpose() * r / n, r.sum() / n};
}

TrainedModel fit(const ModelSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  check_inputs(X, y);
  TrainedModel model;
  model.spec = spec;
  model.n_features = X.cols();
  const double n = static_cast<double>(X.rows());
  const double y_mean = y.mean();

  switch (spec.kind) {
    case ModelKind::Linear: {
      const Eigen::RowVectorXd x_mean = X.colwise().mean();
      const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
      model.coefficients = solve_normal_equations(Xc, y.array() - y_mean);
      model.intercept = y_mean - x_mean.dot(model.coefficients);
      break;
    }
    case ModelKind::Ridge: {
      model.standardizer = Standardizer::fit(X);
      const Eigen::MatrixXd Z = model.standardizer->apply(X);
      const double alpha = spec.param("alpha");
      if (alpha < 0) throw InvalidArgument("ridge alpha must be >= 0");
      const Eigen::MatrixXd A =
          Z.transpose() * Z + alpha * Eigen::MatrixXd::Identity(Z.cols(), Z.cols());
      model.coefficients = A.ldlt().solve(Z.transpose() * (y.array() - y_mean).matrix());
      model.intercept = y_mean;
      break;
    }
    case ModelKind::Lasso: {
      model.standardizer = Standardizer::fit(X);
      const Eigen::MatrixXd Z = model.standardizer->apply(X);
      const double alpha = spec.param("alpha");
      const double tol = spec.param("tolerance");
      const int sweeps = static_cast<int>(spec.param("max_sweeps"));
      if (alpha < 0) throw InvalidArgument("lasso alpha must be >= 0");
      Eigen::VectorXd beta = Eigen::VectorXd::Zero(Z.cols());
      Eigen::VectorXd residual = y.array() - y_mean;
      const Eigen::VectorXd col_sq = Z.colwise().squaredNorm().transpose() / n;
      for (int sweep = 0; sweep < sweeps; ++sweep) {
        double max_step = 0.0;
        for (Eigen::Index j = 0; j < Z.cols(); ++j) {
          if (col_sq(j) == 0.0) continue;
          const double old = beta(j);
          const double rho = Z.col(j).dot(residual) / n + col_sq(j) * old;
          const double updated = soft_threshold(rho, alpha) / col_sq(j);
          if (updated != old) {
            residual -= (updated - old) * Z.col(j);
            beta(j) = updated;
            max_step = std::max(max_step, std::abs(updated - old));
          }
        }
        if (max_step < tol) break;
      }
      model.coefficients = beta;
      model.intercept = y_mean;
      break;
    }
    case ModelKind::Sgd: {
      model.standardizer = Standardizer::fit(X);
      const Eigen::MatrixXd Z = model.standardizer->apply(X);
      const double lr = spec.param("learning_rate");
      const int epochs = static_cast<int>(spec.param("epochs"));
      if (!(lr > 0) || epochs < 1) throw InvalidArgument("sgd needs learning_rate > 0, epochs >= 1");
      Eigen::VectorXd w = Eigen::VectorXd::Zero(Z.cols());
      double b = y_mean;
      Rng rng(spec.seed);
      std::vector<Eigen::Index> order(static_cast<std::size_t>(Z.rows()));
      std::iota(order.begin(), order.end(), 0);
      for (int e = 0; e < epochs; ++e) {
        rng.shuffle(std::span(order));
        for (Eigen::Index i : order) {
          const double err = b + Z.row(i).dot(w) - y(i);
          w -= lr * err * Z.row(i).transpose();
          b -= lr * err;
        }
      }
      if (!w.allFinite() || !std::isfinite(b)) throw NonFiniteInput("sgd diverged");
      model.coefficients = w;
      model.intercept = b;
      break;
    }
    case ModelKind::DecisionTree: {
      std::vector<Eigen::Index> rows(static_cast<std::size_t>(X.rows()));
      std::iota(rows.begin(), rows.end(), 0);
      TreeBuilder builder(X, y, tree_params(spec, X.cols()), nullptr);
      model.trees.push_back(builder.build(std::move(rows)));
      break;
    }
    case ModelKind::RandomForest: {
      const int n_trees = static_cast<int>(spec.param("n_trees"));
      if (n_trees < 1) throw InvalidArgument("n_trees must be >= 1");
      const bool bootstrap = spec.param("bootstrap") != 0.0;
      Rng rng(spec.seed);
      TreeBuilder builder(X, y, tree_params(spec, X.cols()), &rng);
      const auto rows_n = static_cast<std::size_t>(X.rows());
      for (int t = 0; t < n_trees; ++t) {
        std::vector<Eigen::Index> rows(rows_n);
        if (bootstrap) {
          for (auto& r : rows) r = static_cast<Eigen::Index>(rng.below(rows_n));
        } else {
          std::iota(rows.begin(), rows.end(), 0);
        }
        model.trees.push_back(builder.build(std::move(rows)));
      }
      break;
    }
  }
  return model;
}

double mae(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted) {
  if (actual.size() != predicted.size()) {
    throw LengthMismatch("mae: " + std::to_string(actual.size()) + " actual vs " +
                         std::to_string(predicted.size()) + " predicted");
  }
  if (actual.size() == 0) throw InvalidArgument("mae of empty vectors");
  return (actual - predicted).cwiseAbs().mean();
}

ModelEvaluation cross_validate(const ModelSpec& spec, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, const FoldPlan& plan) {
  if (plan.assignments.size() != static_cast<std::size_t>(X.rows())) {
    throw DimensionMismatch("fold plan covers " + std::to_string(plan.assignments.size()) +
                            " rows, data has " + std::to_string(X.rows()));
  }
  ModelEvaluation eval;
  eval.kind = spec.kind;
  for (int f = 0; f < plan.k; ++f) {
    const auto test = plan.test_rows(f);
    if (test.empty()) continue;
    const auto train = plan.train_rows(f);
    auto take = [&](const std::vector<std::size_t>& idx) {
      Eigen::MatrixXd Xs(static_cast<Eigen::Index>(idx.size()), X.cols());
      Eigen::VectorXd ys(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        Xs.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
        ys(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(idx[i]));
      }
      return std::pair{Xs, ys};
    };
    auto [X_train, y_train] = take(train);
    auto [X_test, y_test] = take(test);
    try {
      const TrainedModel model = fit(spec, X_train, y_train);
      eval.fold_mae.push_back(mae(y_test, model.predict(X_test)));
    } catch (const Error& e) {
      throw Error(e.name(), "fold " + std::to_string(f) + ": " + e.what());
    }
  }
  eval.mean_mae_seconds =
      std::accumulate(eval.fold_mae.begin(), eval.fold_mae.end(), 0.0) /
      static_cast<double>(eval.fold_mae.size());
  const double mean_target = y.mean();
  eval.relative_mae_percent = mean_target > 0.0 ? eval.mean_mae_seconds / mean_target * 100.0
                                                : std::numeric_limits<double>::quiet_NaN();
  return eval;
}

// ---- persistence ------------------------------------------------------------

namespace {

std::string join_numbers(const Eigen::Ref<const Eigen::VectorXd>& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += csv::format_double(v(i));
  }
  return out;
}

Eigen::VectorXd read_numbers(std::istringstream& in, Eigen::Index expected, std::size_t line) {
  std::vector<double> values;
  std::string token;
  while (in >> token) values.push_back(csv::parse_double(token));
  if (static_cast<Eigen::Index>(values.size()) != expected) {
    throw ModelFormatError("line " + std::to_string(line) + ": expected " +
                           std::to_string(expected) + " numbers");
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), expected);
}

}  // namespace

void save_model(const TrainedModel& model, std::ostream& out) {
  out << "perfimpact-model 1\n";
  out << "kind " << model_kind_name(model.spec.kind) << "\n";
  out << "seed " << model.spec.seed << "\n";
  for (const auto& [name, value] : model.spec.hyperparams) {
    out << "param " << name << " " << csv::format_double(value) << "\n";
  }
  out << "features " << model.n_features << "\n";
  for (const auto& name : model.feature_names) out << "name " << name << "\n";
  for (const auto& [key, value] : model.metadata) out << "meta " << key << " " << value << "\n";
  if (model.standardizer) {
    out << "mean " << join_numbers(model.standardizer->mean.transpose()) << "\n";
    out << "scale " << join_numbers(model.standardizer->scale.transpose()) << "\n";
  }
  if (model.coefficients.size() > 0) {
    out << "coef " << join_numbers(model.coefficients) << "\n";
    out << "intercept " << csv::format_double(model.intercept) << "\n";
  }
  for (const auto& tree : model.trees) {
    out << "tree " << tree.nodes.size() << "\n";
    for (const auto& n : tree.nodes) {
      out << n.feature << " " << csv::format_double(n.threshold) << " " << n.left << " " << n.right
          << " " << csv::format_double(n.value) << "\n";
    }
  }
  out << "end\n";
}

TrainedModel load_model(std::istream& in) {
  TrainedModel model;
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };
  if (!next_line() || line != "perfimpact-model 1") {
    throw ModelFormatError("not a perfimpact model file (missing 'perfimpact-model 1' header)");
  }
  bool kind_seen = false;
  bool ended = false;
  try {
    while (next_line()) {
      if (line.empty()) continue;
      std::istringstream fields(line);
      std::string key;
      fields >> key;
      if (key == "end") {
        ended = true;
        break;
      } else if (key == "kind") {
        std::string name;
        fields >> name;
        model.spec.kind = model_kind_from_name(name);
        kind_seen = true;
      } else if (key == "seed") {
        fields >> model.spec.seed;
      } else if (key == "param") {
        std::string name, value;
        fields >> name >> value;
        model.spec.hyperparams[name] = csv::parse_double(value);
      } else if (key == "features") {
        fields >> model.n_features;
      } else if (key == "name") {
        // The rest of the line, so names may contain spaces.
        model.feature_names.push_back(line.size() > 5 ? line.substr(5) : std::string());
      } else if (key == "meta") {
        std::string name;
        fields >> name;
        const std::size_t value_at = 5 + name.size() + 1;
        model.metadata[name] = line.size() > value_at ? line.substr(value_at) : std::string();
      } else if (key == "mean") {
        if (!model.standardizer) model.standardizer.emplace();
        model.standardizer->mean = read_numbers(fields, model.n_features, line_no).transpose();
      } else if (key == "scale") {
        if (!model.standardizer) model.standardizer.emplace();
        model.standardizer->scale = read_numbers(fields, model.n_features, line_no).transpose();
      } else if (key == "coef") {
        model.coefficients = read_numbers(fields, model.n_features, line_no);
      } else if (key == "intercept") {
        std::string value;
        fields >> value;
        model.intercept = csv::parse_double(value);
      } else if (key == "tree") {
        std::size_t count = 0;
        fields >> count;
        RegressionTree tree;
        for (std::size_t i = 0; i < count; ++i) {
          if (!next_line()) throw ModelFormatError("truncated tree");
          std::istringstream node_fields(line);
          TreeNode n;
          std::string threshold, value;
          node_fields >> n.feature >> threshold >> n.left >> n.right >> value;
          if (!node_fields) throw ModelFormatError("line " + std::to_string(line_no) + ": bad node");
          n.threshold = csv::parse_double(threshold);
          n.value = csv::parse_double(value);
          const auto limit = static_cast<int>(count);
          if (n.feature >= model.n_features ||
              (n.feature >= 0 && (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) ||
                                  n.left >= limit || n.right >= limit))) {
            throw ModelFormatError("line " + std::to_string(line_no) + ": node links out of range");
          }
          tree.nodes.push_back(n);
        }
        if (tree.nodes.empty()) throw ModelFormatError("empty tree");
        model.trees.push_back(std::move(tree));
      } else {
        throw ModelFormatError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      }
    }
  } catch (const InvalidArgument& e) {
    throw ModelFormatError("line " + std::to_string(line_no) + ": " + e.what());
  }
  if (!kind_seen || !ended) throw ModelFormatError("model file is incomplete");
  const bool tree_kind =
      model.spec.kind == ModelKind::DecisionTree || model.spec.kind == ModelKind::RandomForest;
  if (tree_kind ? model.trees.empty() : model.coefficients.size() != model.n_features) {
    throw ModelFormatError("model parameters missing for " +
                           std::string(model_kind_name(model.spec.kind)));
  }
  if (uses_scaling(model.spec.kind) &&
      (!model.standardizer || model.standardizer->mean.size() != model.n_features ||
       model.standardizer->scale.size() != model.n_features)) {
    throw ModelFormatError("standardization parameters missing");
  }
  return model;
}

}  // namespace perfimpact
