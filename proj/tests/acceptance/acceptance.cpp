// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "perfimpact/csv.hpp"
#include "perfimpact/dataset.hpp"
#include "perfimpact/java_parser.hpp"
#include "perfimpact/pipeline.hpp"
#include "perfimpact/process.hpp"
#include "perfimpact/random.hpp"
#include "perfimpact/report.hpp"
#include "synthetic.hpp"
#include "util.hpp"

using namespace perfimpact;
using namespace perfimpact::testing;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects failed conditions for one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

ProcessResult cli(const std::vector<std::string>& args) {
  std::vector<std::string> argv = {PERFIMPACT_CLI};
  argv.insert(argv.end(), args.begin(), args.end());
  ProcessOptions opts;
  opts.timeout_seconds = 300;
  return run_process(argv, opts);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const AstNode* find_first(const AstNode& n, NodeKind k) {
  if (n.kind == k) return &n;
  for (const auto& c : n.children) {
    if (const AstNode* hit = find_first(c, k)) return hit;
  }
  return nullptr;
}

std::string criterion1(Check& c) {
  const std::string src = read_file(fixture("java/Guard.java"));
  const auto start = Clock::now();
  const Ast ast = parse_java(src, "Guard.java");
  const double t = seconds_since(start);
  c.expect(count_kinds(ast, {NodeKind::MethodDeclaration}) == 1, "MethodDeclaration != 1");
  c.expect(count_kinds(ast, {NodeKind::IfStatement}) == 1, "IfStatement != 1");
  c.expect(count_kinds(ast, {NodeKind::BinaryExpression}) == 1, "BinaryExpression != 1");
  const AstNode* bin = find_first(ast.root(), NodeKind::BinaryExpression);
  c.expect(bin && bin->attribute("operator") == ">", "operator is not >");
  c.expect(count_kinds(ast, {NodeKind::ReturnStatement}) == 2, "ReturnStatement != 2");
  c.expect(count_kinds(ast, {NodeKind::Literal}) == 3, "Literal != 3");
  c.expect(t < 1.0, "parse took >= 1 s");
  return "parse " + fmt("%.4f", t) + " s";
}

std::string criterion2(Check& c) {
  c.expect(std::abs(fe_transform(0, 10) + 1.0) <= 1e-12, "fe(0,10) != -1");
  c.expect(std::abs(fe_transform(9, 10)) <= 1e-12, "fe(9,10) != 0");
  c.expect(std::abs(fe_transform(99, 10) - 1.0) <= 1e-12, "fe(99,10) != 1");
  Rng rng(2024);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t len = 1 + rng.below(1000000);
    const std::size_t a = rng.below(1000000);
    const std::size_t b = rng.below(1000000);
    if (a == b) continue;
    const bool ok = (a < b) == (fe_transform(a, len) < fe_transform(b, len));
    violations += ok ? 0 : 1;
  }
  c.expect(violations == 0, std::to_string(violations) + " monotonicity violations");
  return "1000 random pairs";
}

std::string criterion3(Check& c) {
  Rng rng(77);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    VectorXd a(100), b(100);
    double brute = 0.0;
    for (int i = 0; i < 100; ++i) {
      a(i) = rng.uniform(-1000, 1000);
      b(i) = rng.uniform(-1000, 1000);
    }
    for (int i = 0; i < 100; ++i) brute += std::fabs(a(i) - b(i));
    brute /= 100.0;
    worst = std::max(worst, std::abs(mae(a, b) - brute));
    if (mae(a, a) != 0.0) c.expect(false, "mae(x,x) != 0");
  }
  c.expect(worst <= 1e-12, "max deviation " + fmt("%.3g", worst));
  return "max deviation " + fmt("%.3g", worst);
}

std::string criterion4(Check& c) {
  const Dataset ds = read_csv(fixture("dataset/synthetic210.csv"));
  c.expect(ds.size() == 210, "fixture does not have 210 rows");
  const FoldPlan plan = kfold_stratified(ds, 10, 0);
  std::vector<int> seen(ds.size(), 0);
  for (int f = 0; f < 10; ++f) {
    for (std::size_t r : plan.test_rows(f)) ++seen[r];
  }
  c.expect(std::all_of(seen.begin(), seen.end(), [](int n) { return n == 1; }),
           "rows not covered exactly once");
  c.expect(plan.sizes() == std::vector<std::size_t>(10, 21), "fold sizes are not all 21");
  double global = 0.0;
  for (double t : ds.target) global += t;
  global /= static_cast<double>(ds.size());
  double worst = 0.0;
  for (int f = 0; f < 10; ++f) {
    double mean = 0.0;
    const auto rows = plan.test_rows(f);
    for (std::size_t r : rows) mean += ds.target[r];
    mean /= static_cast<double>(rows.size());
    worst = std::max(worst, std::abs(mean - global) / global);
  }
  c.expect(worst <= 0.10, "fold mean off by " + fmt("%.1f%%", worst * 100));
  c.expect(kfold_stratified(ds, 10, 0).assignments == plan.assignments, "not deterministic");
  return "worst fold-mean deviation " + fmt("%.2f%%", worst * 100);
}

std::string criterion5(Check& c) {
  const SyntheticCorpus corpus = generate_synthetic(1);
  std::size_t files = 0;
  for (const auto& s : corpus.snapshots) files += s.files.size();
  c.expect(corpus.snapshots.size() == 5 && files == 210, "fixture is not 42 x 5");
  const ExtractionResult ex = extract_snapshots(corpus.snapshots, FeatureSchema::paper13());
  const Dataset ds = build_dataset(ex, corpus.timings, false).dataset;
  c.expect(ds.size() == 210, "rows = " + std::to_string(ds.size()));
  c.expect(ds.width() == 13, "feature columns = " + std::to_string(ds.width()));
  std::ostringstream out;
  write_csv(ds, out);
  const std::string header = out.str().substr(0, out.str().find('\n'));
  std::istringstream hs(header);
  const auto fields = csv::read_all(hs).at(0);
  c.expect(fields.size() == 2 + 13 + 1 && fields.back() == kTargetColumn,
           "header is not file,snapshot,<13>,Test(sec)");
  return std::to_string(ds.size()) + " rows x " + std::to_string(ds.width()) + " features + " +
         kTargetColumn;
}

std::string criterion6(Check& c) {
  const auto start = Clock::now();
  Rng rng(6);

  // y = 2 x1 + 3, noiseless
  MatrixXd X(50, 1);
  VectorXd y(50);
  for (int i = 0; i < 50; ++i) {
    X(i, 0) = rng.uniform(-10, 10);
    y(i) = 2 * X(i, 0) + 3;
  }
  const TrainedModel lin = fit(default_spec(ModelKind::Linear), X, y);
  c.expect(std::abs(lin.raw_coefficients()(0) - 2) <= 1e-6 && std::abs(lin.raw_intercept() - 3) <= 1e-6,
           "linear did not recover y = 2x + 3");

  MatrixXd X3(80, 3);
  VectorXd y3(80);
  for (int i = 0; i < 80; ++i) {
    for (int j = 0; j < 3; ++j) X3(i, j) = rng.uniform(-2, 2);
    y3(i) = 1 + X3(i, 0) - 0.5 * X3(i, 2) + 0.1 * rng.normal();
  }
  const TrainedModel ols = fit(default_spec(ModelKind::Linear), X3, y3);
  const TrainedModel ridge = fit(default_spec(ModelKind::Ridge).set("alpha", 1e-10), X3, y3);
  c.expect((ridge.raw_coefficients() - ols.raw_coefficients()).cwiseAbs().maxCoeff() <= 1e-4,
           "ridge does not approach OLS");

  const Standardizer s = Standardizer::fit(X3);
  const VectorXd yc = y3.array() - y3.mean();
  const double alpha = 10 * (s.apply(X3).transpose() * yc).cwiseAbs().maxCoeff() / 80.0;
  const TrainedModel lasso = fit(default_spec(ModelKind::Lasso).set("alpha", alpha), X3, y3);
  c.expect((lasso.coefficients.array() == 0.0).all(), "lasso slopes not exactly zero");

  VectorXd yn(80);
  for (int i = 0; i < 80; ++i) yn(i) = std::sin(3 * X3(i, 0)) + X3(i, 1) * X3(i, 2);
  const TrainedModel tree = fit(default_spec(ModelKind::DecisionTree).set("max_depth", -1), X3, yn);
  c.expect(mae(yn, tree.predict(X3)) == 0.0, "unbounded tree training MAE != 0");

  const TrainedModel forest = fit(default_spec(ModelKind::RandomForest, 1), X3, yn);
  const VectorXd fp = forest.predict(X3 * 4.0);
  c.expect(fp.minCoeff() >= yn.minCoeff() && fp.maxCoeff() <= yn.maxCoeff(),
           "forest prediction outside target range");

  // SGD loss gradient on a 3x2 instance.
  double sgd_worst = 0.0;
  {
    MatrixXd Z(3, 2);
    Z << 0.5, -1.2, 1.5, 0.3, -0.7, 2.0;
    const VectorXd t = Eigen::Vector3d(1.0, -2.0, 0.5);
    const VectorXd w = Eigen::Vector2d(0.3, -0.8);
    const double b = 0.2, h = 1e-6;
    const auto [gw, gb] = sgd_gradient(Z, t, w, b);
    for (int j = 0; j < 2; ++j) {
      VectorXd wp = w, wm = w;
      wp(j) += h;
      wm(j) -= h;
      const double num = (sgd_loss(Z, t, wp, b) - sgd_loss(Z, t, wm, b)) / (2 * h);
      sgd_worst = std::max(sgd_worst, std::abs(gw(j) - num) / std::max(std::abs(num), 1e-8));
    }
    const double num = (sgd_loss(Z, t, w, b + h) - sgd_loss(Z, t, w, b - h)) / (2 * h);
    sgd_worst = std::max(sgd_worst, std::abs(gb - num) / std::max(std::abs(num), 1e-8));
  }
  c.expect(sgd_worst <= 1e-5, "sgd gradient error " + fmt("%.3g", sgd_worst));

  // CBOW loss gradient on a 3-kind vocabulary.
  double cbow_worst = 0.0;
  {
    MatrixXd in(3, 4), out(3, 4);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 4; ++j) {
        in(i, j) = rng.uniform(-1, 1);
        out(i, j) = rng.uniform(-1, 1);
      }
    }
    const CbowExample ex{{0, 1}, 2, {0, 1, 1}};
    const CbowGradient g = cbow_gradient(in, out, ex);
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 4; ++j) {
        for (int which = 0; which < 2; ++which) {
          MatrixXd p = which ? out : in, m = p;
          p(i, j) += h;
          m(i, j) -= h;
          const double num = which ? (cbow_loss(in, p, ex) - cbow_loss(in, m, ex)) / (2 * h)
                                   : (cbow_loss(p, out, ex) - cbow_loss(m, out, ex)) / (2 * h);
          const double ana = which ? g.d_output(i, j) : g.d_input(i, j);
          cbow_worst = std::max(cbow_worst, std::abs(ana - num) /
                                                std::max({std::abs(ana), std::abs(num), 1e-6}));
        }
      }
    }
  }
  c.expect(cbow_worst <= 1e-4, "cbow gradient error " + fmt("%.3g", cbow_worst));
  const double t = seconds_since(start);
  c.expect(t < 60.0, "took " + fmt("%.1f", t) + " s");
  return "sgd grad err " + fmt("%.2g", sgd_worst) + ", cbow grad err " + fmt("%.2g", cbow_worst) +
         ", " + fmt("%.2f", t) + " s";
}

std::string criterion7(Check& c) {
  TempDir dir;
  int rf_wins = 0;
  double slowest = 0.0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const fs::path out = dir / ("seed" + std::to_string(seed));
    const SyntheticCorpus corpus = generate_synthetic(seed);
    const ExtractionResult ex = extract_snapshots(corpus.snapshots, FeatureSchema::paper13());
    {
      fs::create_directories(out);
      std::ofstream f(out / "features.csv");
      write_features_csv(ex, f);
      std::ofstream t(out / "timings.csv");
      write_timings_csv(corpus.timings, t);
    }
    const auto start = Clock::now();
    const ProcessResult built = cli({"build-dataset", (out / "features.csv").string(),
                                     (out / "timings.csv").string(), "--out", out.string()});
    const ProcessResult evaluated =
        cli({"evaluate", (out / "dataset.csv").string(), "--k", "10", "--out", out.string()});
    slowest = std::max(slowest, seconds_since(start));
    if (built.exit_status != 0 || evaluated.exit_status != 0) {
      c.expect(false, "seed " + std::to_string(seed) + ": cli failed: " + built.output +
                          evaluated.output);
      continue;
    }
    const EvalReport report = report_from_json(read_file(out / "report.json"));
    double linear = NAN, forest = NAN;
    bool finite = report.models.size() == 6;
    for (const auto& m : report.models) {
      finite = finite && std::isfinite(m.relative_mae_percent);
      if (m.kind == ModelKind::Linear) linear = m.relative_mae_percent;
      if (m.kind == ModelKind::RandomForest) forest = m.relative_mae_percent;
    }
    c.expect(finite, "seed " + std::to_string(seed) + ": non-finite relative MAE");
    if (forest < linear) ++rf_wins;
    detail += " " + fmt("%.2f", forest) + "/" + fmt("%.2f", linear);
  }
  c.expect(slowest < 300.0, "slowest seed took " + fmt("%.1f", slowest) + " s");
  c.expect(rf_wins >= 7, "random_forest beat linear in only " + std::to_string(rf_wins) + "/10");
  return "random_forest < linear in " + std::to_string(rf_wins) + "/10 seeds, slowest " +
         fmt("%.1f", slowest) + " s; rf/linear %:" + detail;
}

std::string criterion8(Check& c) {
  TempDir dir;
  RunConfig sleep;
  sleep.repo_path = dir.path();
  sleep.test_command = "sleep 0.2";
  sleep.repetitions = 3;
  sleep.warmup_runs = 0;
  const TimingRecord r = time_tests(sleep);
  c.expect(r.test_seconds >= 0.2 && r.test_seconds <= 0.3,
           "median " + fmt("%.3f", r.test_seconds) + " s outside [0.2, 0.3]");

  const fs::path repo = dir / "repo";
  make_fixture_repo(repo);
  GitRepo git_repo(repo);
  const std::string head = git_repo.head_commit();
  const std::string ref = git_repo.current_ref();
  RunConfig config;
  config.repo_path = repo;
  config.test_command = "true";
  config.snapshots = {{"v1", "first", 1}, {"v2", "second", 2}};

  std::vector<std::string> visited;
  const auto outcomes = walk_history(config, [&](const Snapshot& s, const fs::path&) {
    visited.push_back(s.id + "@" + git_repo.head_commit().substr(0, 7));
    return 0;
  });
  c.expect(outcomes.size() == 2 && outcomes[0].ok() && outcomes[1].ok(), "not 2 successful visits");
  c.expect(visited.size() == 2 && git_repo.resolve("v1").substr(0, 7) == visited[0].substr(3),
           "v1 was not checked out when visited");
  c.expect(git_repo.head_commit() == head && git_repo.current_ref() == ref, "head not restored");

  const auto failed = walk_history(config, [](const Snapshot&, const fs::path&) -> int {
    throw std::runtime_error("visitor failure");
  });
  c.expect(failed.size() == 2 && !failed[0].ok() && !failed[1].ok(), "visitor errors not captured");
  c.expect(git_repo.head_commit() == head && git_repo.current_ref() == ref,
           "head not restored after visitor errors");

  bool escaped = false;
  try {
    walk_history(config, [](const Snapshot&, const fs::path&) -> int { throw 42; });
  } catch (int) {
    escaped = true;
  }
  c.expect(escaped && git_repo.head_commit() == head && git_repo.current_ref() == ref,
           "head not restored after an escaping throw");
  return "median " + fmt("%.3f", r.test_seconds) + " s; visited " + std::to_string(visited.size()) +
         " snapshots, head restored";
}

std::string criterion9(Check& c) {
  TempDir dir;
  std::string json[2], svg[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path out = dir / ("run" + std::to_string(run));
    const ProcessResult e = cli({"evaluate", fixture("dataset/synthetic210.csv").string(), "--seed",
                                 "7", "--out", out.string()});
    const ProcessResult p = cli({"plot", (out / "report.json").string(), "--out", out.string()});
    c.expect(e.exit_status == 0 && p.exit_status == 0, "cli failed");
    json[run] = read_file(out / "report.json");
    svg[run] = read_file(out / "chart.svg");
  }
  c.expect(!json[0].empty() && json[0] == json[1], "report JSON differs between runs");
  c.expect(!svg[0].empty() && svg[0] == svg[1], "SVG differs between runs");
  return "report " + std::to_string(json[0].size()) + " bytes, chart " +
         std::to_string(svg[0].size()) + " bytes";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<std::string(Check&)>>> criteria = {
      {"parser fixture", criterion1},        {"fe_transform suite", criterion2},
      {"mae oracle", criterion3},            {"fold correctness", criterion4},
      {"dataset fan-out", criterion5},       {"model correctness", criterion6},
      {"synthetic end-to-end", criterion7},  {"harness", criterion8},
      {"determinism", criterion9}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    std::string detail;
    try {
      detail = criteria[i].second(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = check.failures.empty();
    if (!ok) {
      ++failed;
      detail.clear();
      for (const auto& f : check.failures) detail += (detail.empty() ? "" : "; ") + f;
    }
    std::printf("%s %zu %s: %s\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
