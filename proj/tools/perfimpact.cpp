// perfimpact: learn how source changes move test-suite runtime.
//
//   perfimpact preflight --config run.conf
//   perfimpact extract src/ --out out/ [--schema paper13|full] [--dump-ast]
//   perfimpact collect --config run.conf --out out/
//   perfimpact build-dataset out/features.csv out/timings.csv --out out/
//   perfimpact evaluate out/dataset.csv --k 10 --seed 1 --out out/
//   perfimpact predict out/model.txt path/to/checkout [--snapshot main]
//   perfimpact plot out/report.json --out out/
//
// Exit status: 0 success, 1 operational error, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "perfimpact/ast.hpp"
#include "perfimpact/csv.hpp"
#include "perfimpact/errors.hpp"
#include "perfimpact/git.hpp"
#include "perfimpact/java_parser.hpp"
#include "perfimpact/pipeline.hpp"

namespace fs = std::filesystem;
using namespace perfimpact;

namespace {

struct Options {
  std::string config;
  std::string schema = "paper13";
  int k = 10;
  std::uint64_t seed = 0;
  std::string out = ".";
  std::string snapshot;
  std::string group_split = "row";
  std::string group_by;
  bool dump_ast = false;
  std::vector<std::string> inputs;
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool use_color() {
  const char* no_color = std::getenv("NO_COLOR");
  return (no_color == nullptr || *no_color == '\0') && isatty(fileno(stdout));
}

fs::path out_path(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  return fs::path(o.out) / name;
}

template <class Fn>
void write_file(const fs::path& path, Fn&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  body(out);
  if (!out) throw IoError("error writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig require_config(const Options& o) {
  if (o.config.empty()) throw UsageError("--config is required");
  return load_run_config(o.config);
}

void report_skipped(const ExtractionResult& r) {
  for (const auto& [snapshot, skipped] : r.skipped) {
    std::cerr << "warning: skipped " << skipped.path << " @ " << snapshot << ": " << skipped.reason
              << "\n";
  }
}

void write_extraction(const Options& o, const ExtractionResult& r) {
  const fs::path features = out_path(o, "features.csv");
  write_file(features, [&](std::ostream& out) { write_features_csv(r, out); });
  write_file(out_path(o, "raw_counts.csv"),
             [&](std::ostream& out) { write_raw_counts_csv(r, out); });
  std::size_t rows = 0;
  for (const auto& s : r.snapshots) rows += s.vectors.size();
  std::cout << "wrote " << rows << " rows x " << r.schema->size() << " columns to "
            << features.string() << "\n";
}

int cmd_preflight(const Options& o) {
  const RunConfig config = require_config(o);
  bool all = true;
  for (const auto& c : preflight(config)) {
    std::printf("%-14s %-4s %s\n", c.name.c_str(), c.passed ? "PASS" : "FAIL", c.detail.c_str());
    all = all && c.passed;
  }
  return all ? 0 : 1;
}

int cmd_extract(const Options& o) {
  if (o.inputs.size() != 1) throw UsageError("extract takes exactly one <path>");
  const fs::path root = o.inputs[0];
  std::vector<SourceFile> files = load_java_files(root);
  if (files.empty()) throw IoError("no .java files under " + root.string());
  if (o.dump_ast) {
    for (const auto& f : files) {
      std::cout << "# " << f.path << "\n";
      try {
        dump_ast(parse_java(f.text, f.path), std::cout);
      } catch (const ParseError& e) {
        std::cout << "# not parsed: " << e.what() << "\n";
      }
    }
  }
  const std::string label = o.snapshot.empty() ? "working" : o.snapshot;
  ExtractionResult r = extract_snapshots({{label, std::move(files)}},
                                         FeatureSchema::by_name(o.schema));
  report_skipped(r);
  write_extraction(o, r);
  return 0;
}

int cmd_collect(const Options& o) {
  const RunConfig config = require_config(o);
  struct Collected {
    std::vector<SourceFile> files;
    TimingRecord timing;
  };
  auto outcomes = walk_history(config, [&](const Snapshot& s, const fs::path& repo) {
    std::cerr << "snapshot " << s.id << " (" << s.label << ")\n";
    Collected c;
    c.files = load_java_files(repo);  // read before timing touches the tree
    c.timing = time_tests(config, s.id, repo);
    return c;
  });

  std::vector<SnapshotSources> sources;
  std::vector<TimingRecord> timings;
  for (auto& outcome : outcomes) {
    if (!outcome.ok()) {
      std::cerr << "error: snapshot " << outcome.snapshot.id << ": " << outcome.error_name << ": "
                << outcome.error_message << "\n";
      continue;
    }
    sources.push_back({outcome.snapshot.id, std::move(outcome.result->files)});
    timings.push_back(std::move(outcome.result->timing));
  }
  if (sources.empty()) throw EmptySnapshot("no snapshot could be collected");

  write_file(out_path(o, "timings.csv"),
             [&](std::ostream& out) { write_timings_csv(timings, out); });
  ExtractionResult r = extract_snapshots(sources, FeatureSchema::by_name(o.schema));
  report_skipped(r);
  write_extraction(o, r);
  return sources.size() == outcomes.size() ? 0 : 1;
}

int cmd_build_dataset(const Options& o) {
  if (o.inputs.size() != 2) throw UsageError("build-dataset takes <features.csv> <timings.csv>");
  if (!o.group_by.empty() && o.group_by != "snapshot") {
    throw UsageError("--group-by accepts only 'snapshot'");
  }
  std::istringstream features_text(read_file(o.inputs[0]));
  std::istringstream timings_text(read_file(o.inputs[1]));
  ExtractionResult features = read_features_csv(features_text);
  std::vector<TimingRecord> timings = read_timings_csv(timings_text);
  DatasetBuild build = build_dataset(features, timings, o.group_by == "snapshot");
  build.dataset.provenance["features_digest"] = fnv1a_hex(features_text.str());
  build.dataset.provenance["timings_digest"] = fnv1a_hex(timings_text.str());
  const fs::path path = out_path(o, "dataset.csv");
  write_csv(build.dataset, path);
  std::cout << "wrote " << build.dataset.size() << " rows x " << build.dataset.width()
            << " features to " << path.string() << "\n";
  return 0;
}

int cmd_evaluate(const Options& o) {
  if (o.inputs.size() != 1) throw UsageError("evaluate takes exactly one <dataset.csv>");
  GroupSplit split;
  if (o.group_split == "row") {
    split = GroupSplit::Row;
  } else if (o.group_split == "snapshot") {
    split = GroupSplit::Snapshot;
  } else {
    throw UsageError("--group-split must be 'row' or 'snapshot'");
  }
  const Dataset dataset = read_csv(fs::path(o.inputs[0]));
  Evaluation eval = evaluate_dataset(dataset, o.k, o.seed, split);
  const std::string json = report_to_json(eval.report);
  write_file(out_path(o, "report.json"), [&](std::ostream& out) { out << json; });
  write_file(out_path(o, "model.txt"), [&](std::ostream& out) { save_model(eval.best_model, out); });
  std::cout << format_table(eval.report, use_color());
  std::cout << "best: " << model_kind_name(eval.best_model.spec.kind) << " (model saved to "
            << out_path(o, "model.txt").string() << ")\n";
  return 0;
}

int cmd_predict(const Options& o) {
  if (o.inputs.size() != 2) throw UsageError("predict takes <model.txt> <candidate_dir>");
  std::istringstream model_text(read_file(o.inputs[0]));
  const TrainedModel model = load_model(model_text);
  const fs::path root = o.inputs[1];
  std::vector<SourceFile> files = load_java_files(root);
  if (!o.snapshot.empty()) {
    // Only files the candidate tree changed relative to the snapshot.
    GitRepo repo(root);
    std::string top_text = repo.run({"rev-parse", "--show-toplevel"});
    while (!top_text.empty() && top_text.back() == '\n') top_text.pop_back();
    const fs::path top = fs::canonical(top_text);
    std::set<std::string> changed;
    for (const auto& path : repo.changed_files(o.snapshot)) {
      changed.insert(fs::relative(top / path, fs::canonical(root)).generic_string());
    }
    std::erase_if(files, [&](const SourceFile& f) { return !changed.count(f.path); });
  }
  if (files.empty()) {
    std::cout << "no changed Java files\n";
    return 0;
  }
  const auto predictions = predict_files(model, files);
  write_file(out_path(o, "predictions.csv"),
             [&](std::ostream& out) { write_predictions_csv(predictions, out); });
  std::printf("%-40s %12s %12s %12s %9s\n", "file", "predicted", "baseline", "delta (s)",
              "delta %");
  for (const auto& p : predictions) {
    std::printf("%-40s %12.3f %12.3f %+12.3f %+8.2f%%\n", p.file_path.c_str(), p.predicted_seconds,
                p.baseline_seconds, p.delta_seconds, p.delta_percent);
  }
  return 0;
}

int cmd_plot(const Options& o) {
  if (o.inputs.size() != 1) throw UsageError("plot takes exactly one <report.json>");
  const EvalReport report = report_from_json(read_file(o.inputs[0]));
  const fs::path path = out_path(o, "chart.svg");
  const std::string svg = render_chart(report);
  write_file(path, [&](std::ostream& out) { out << svg; });
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predict the test-time impact of Java source changes from code stylometry."};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
  };
  auto add_schema = [&](CLI::App* sub) {
    sub->add_option("--schema", o.schema, "Feature schema profile")
        ->check(CLI::IsMember({"paper13", "full"}))
        ->capture_default_str();
  };

  auto* preflight_cmd = app.add_subcommand("preflight", "Check a repository against the checklist");
  preflight_cmd->add_option("--config", o.config, "Run configuration file")->required();

  auto* extract_cmd = app.add_subcommand("extract", "Extract features from a file or directory");
  extract_cmd->add_option("path", o.inputs, "Java file or directory")->required();
  add_schema(extract_cmd);
  add_common(extract_cmd);
  extract_cmd->add_option("--snapshot", o.snapshot, "Snapshot label for the rows");
  extract_cmd->add_flag("--dump-ast", o.dump_ast, "Print each file's syntax tree");

  auto* collect_cmd = app.add_subcommand("collect", "Walk snapshots, extract features, time tests");
  collect_cmd->add_option("--config", o.config, "Run configuration file")->required();
  add_schema(collect_cmd);
  add_common(collect_cmd);

  auto* build_cmd = app.add_subcommand("build-dataset", "Join features with timings");
  build_cmd->add_option("inputs", o.inputs, "<features.csv> <timings.csv>")->required()->expected(2);
  build_cmd->add_option("--group-by", o.group_by, "Aggregate rows per snapshot");
  add_common(build_cmd);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Cross-validate the six model kinds");
  evaluate_cmd->add_option("dataset", o.inputs, "Dataset CSV")->required();
  evaluate_cmd->add_option("--k", o.k, "Number of folds")->capture_default_str();
  evaluate_cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  evaluate_cmd->add_option("--group-split", o.group_split, "row or snapshot")->capture_default_str();
  add_common(evaluate_cmd);

  auto* predict_cmd = app.add_subcommand("predict", "Predict test time for a candidate tree");
  predict_cmd->add_option("inputs", o.inputs, "<model.txt> <candidate_dir>")->required()->expected(2);
  predict_cmd->add_option("--snapshot", o.snapshot, "Only files changed since this commit");
  add_common(predict_cmd);

  auto* plot_cmd = app.add_subcommand("plot", "Render an evaluation report as SVG");
  plot_cmd->add_option("report", o.inputs, "EvalReport JSON")->required();
  add_common(plot_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*preflight_cmd) return cmd_preflight(o);
    if (*extract_cmd) return cmd_extract(o);
    if (*collect_cmd) return cmd_collect(o);
    if (*build_cmd) return cmd_build_dataset(o);
    if (*evaluate_cmd) return cmd_evaluate(o);
    if (*predict_cmd) return cmd_predict(o);
    if (*plot_cmd) return cmd_plot(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.name() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
