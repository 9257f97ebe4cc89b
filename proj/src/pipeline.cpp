#include "perfimpact/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "perfimpact/csv.hpp"
#include "perfimpact/errors.hpp"
#include "perfimpact/java_parser.hpp"

namespace perfimpact {

namespace fs = std::filesystem;

namespace {

constexpr char kKeySeparator = '\x1f';

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<SourceFile> load_java_files(const fs::path& root) {
  std::vector<SourceFile> files;
  if (fs::is_regular_file(root)) {
    files.push_back({root.filename().string(), read_text(root)});
    return files;
  }
  if (!fs::is_directory(root)) throw IoError(root.string() + " is not a file or directory");
  for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator();
       ++it) {
    const auto name = it->path().filename().string();
    if (it->is_directory() && !name.empty() && name[0] == '.') {
      it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file() && it->path().extension() == ".java") {
      files.push_back({fs::relative(it->path(), root).generic_string(), read_text(it->path())});
    }
  }
  std::sort(files.begin(), files.end(),
            [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
  return files;
}

ExtractionResult extract_snapshots(const std::vector<SnapshotSources>& sources,
                                   const FeatureSchema& schema, const CbowConfig& cbow) {
  std::vector<SourceFile> all;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    for (const auto& f : sources[s].files) {
      all.push_back({std::to_string(s) + kKeySeparator + f.path, f.text});
    }
  }
  auto split_key = [&](const std::string& key) {
    const auto sep = key.find(kKeySeparator);
    return std::pair{std::stoul(key.substr(0, sep)), key.substr(sep + 1)};
  };

  CorpusFeatures corpus = extract_corpus(all, schema, cbow);
  ExtractionResult result;
  result.schema = corpus.schema;
  for (const auto& s : sources) result.snapshots.push_back({s.snapshot, {}});
  for (auto& fv : corpus.vectors) {
    auto [s, path] = split_key(fv.file_path);
    fv.file_path = path;
    result.snapshots[s].vectors.push_back(std::move(fv));
  }
  for (const auto& skipped : corpus.skipped) {
    auto [s, path] = split_key(skipped.path);
    result.skipped.push_back({sources[s].snapshot, {path, skipped.reason}});
  }
  return result;
}

void write_features_csv(const ExtractionResult& extraction, std::ostream& out) {
  std::vector<std::string> fields = {"file", "snapshot"};
  for (const auto& name : extraction.schema->column_names()) fields.push_back(name);
  csv::write_row(out, fields);
  for (const auto& snap : extraction.snapshots) {
    for (const auto& fv : snap.vectors) {
      fields = {fv.file_path, snap.snapshot};
      for (double v : fv.values) fields.push_back(csv::format_double(v));
      csv::write_row(out, fields);
    }
  }
}

void write_raw_counts_csv(const ExtractionResult& extraction, std::ostream& out) {
  std::vector<std::string> counted;
  for (const auto& name : extraction.schema->column_names()) {
    for (const auto& snap : extraction.snapshots) {
      if (std::any_of(snap.vectors.begin(), snap.vectors.end(),
                      [&](const FeatureVector& fv) { return fv.raw_counts.count(name) > 0; })) {
        counted.push_back(name);
        break;
      }
    }
  }
  std::vector<std::string> fields = {"file", "snapshot", "file_length_chars"};
  fields.insert(fields.end(), counted.begin(), counted.end());
  csv::write_row(out, fields);
  for (const auto& snap : extraction.snapshots) {
    for (const auto& fv : snap.vectors) {
      fields = {fv.file_path, snap.snapshot, std::to_string(fv.file_length_chars)};
      for (const auto& name : counted) {
        auto it = fv.raw_counts.find(name);
        fields.push_back(it == fv.raw_counts.end() ? "" : std::to_string(it->second));
      }
      csv::write_row(out, fields);
    }
  }
}

ExtractionResult read_features_csv(std::istream& in) {
  auto rows = csv::read_all(in);
  if (rows.empty() || rows[0].size() < 3 || rows[0][0] != "file" || rows[0][1] != "snapshot") {
    throw SchemaMismatch("features header must be file,snapshot,<columns>");
  }
  std::vector<std::string> columns(rows[0].begin() + 2, rows[0].end());
  ExtractionResult result;
  result.schema =
      std::make_shared<const FeatureSchema>(FeatureSchema::from_column_names(columns));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != rows[0].size()) {
      throw SchemaMismatch("features row " + std::to_string(i + 1) + " has " +
                           std::to_string(row.size()) + " fields");
    }
    auto snap = std::find_if(result.snapshots.begin(), result.snapshots.end(),
                             [&](const SnapshotFeatures& s) { return s.snapshot == row[1]; });
    if (snap == result.snapshots.end()) {
      result.snapshots.push_back({row[1], {}});
      snap = result.snapshots.end() - 1;
    }
    FeatureVector fv;
    fv.schema = result.schema;
    fv.file_path = row[0];
    for (std::size_t j = 2; j < row.size(); ++j) fv.values.push_back(csv::parse_double(row[j]));
    snap->vectors.push_back(std::move(fv));
  }
  return result;
}

DatasetBuild build_dataset(const ExtractionResult& features,
                           const std::vector<TimingRecord>& timings, bool group_by) {
  std::map<std::string, TimingRecord> by_snapshot;
  for (const auto& t : timings) by_snapshot[t.snapshot] = t;
  DatasetBuild build;
  build.dataset = assemble(features.snapshots, by_snapshot, &build.warnings);
  if (features.schema && build.dataset.rows.empty()) build.dataset.schema = features.schema;
  if (group_by) build.dataset = group_by_snapshot(build.dataset);
  return build;
}

Evaluation evaluate_dataset(const Dataset& dataset, int k, std::uint64_t seed, GroupSplit split) {
  const std::vector<std::string> groups = dataset.snapshots();
  const FoldPlan plan = split == GroupSplit::Row ? kfold_stratified(dataset, k, seed)
                                                 : kfold_grouped(groups, k, seed);
  Evaluation eval;
  eval.report = evaluate_models(dataset, plan, seed);
  eval.report.group_split = split == GroupSplit::Row ? "row" : "snapshot";

  const ModelKind best = eval.report.best().kind;
  eval.best_model = fit(default_spec(best, seed), dataset.features(), dataset.targets());
  eval.best_model.feature_names = dataset.schema->column_names();
  // The most recent snapshot's measured time is the baseline for predictions.
  eval.best_model.metadata["baseline_test_seconds"] = csv::format_double(dataset.target.back());
  eval.best_model.metadata["baseline_snapshot"] = dataset.rows.back().snapshot;
  eval.best_model.metadata["dataset_digest"] = eval.report.dataset_digest;
  return eval;
}

std::vector<FilePrediction> predict_files(const TrainedModel& model,
                                          const std::vector<SourceFile>& files) {
  if (model.feature_names.empty()) throw ModelFormatError("model file lists no feature columns");
  auto schema = std::make_shared<const FeatureSchema>(
      FeatureSchema::from_column_names(model.feature_names));
  if (schema->enable_embedding()) {
    throw InvalidArgument("the model uses embedding columns, which cannot be recomputed without "
                          "the training corpus");
  }
  auto base = model.metadata.find("baseline_test_seconds");
  if (base == model.metadata.end()) throw ModelFormatError("model has no baseline_test_seconds");
  const double baseline = csv::parse_double(base->second);

  CorpusContext context;
  if (schema->enable_ast_tfidf()) {
    std::vector<Ast> asts;
    for (const auto& f : files) {
      try {
        asts.push_back(parse_java(f.text, f.path));
      } catch (const ParseError&) {
      }
    }
    context.idf = ast_idf(asts);
  }

  std::vector<FilePrediction> out;
  for (const auto& f : files) {
    FeatureVector fv;
    try {
      fv = extract_file(f.text, schema, f.path, &context);
    } catch (const ParseError& e) {
      std::cerr << "warning: skipped " << f.path << ": " << e.what() << "\n";
      continue;
    } catch (const InvalidArgument& e) {
      std::cerr << "warning: skipped " << f.path << ": " << e.what() << "\n";
      continue;
    }
    const Eigen::Map<const Eigen::RowVectorXd> row(fv.values.data(),
                                                   static_cast<Eigen::Index>(fv.values.size()));
    FilePrediction p;
    p.file_path = f.path;
    p.predicted_seconds = model.predict(Eigen::MatrixXd(row))(0);
    p.baseline_seconds = baseline;
    p.delta_seconds = p.predicted_seconds - baseline;
    p.delta_percent = baseline != 0.0 ? p.delta_seconds / baseline * 100.0 : 0.0;
    out.push_back(p);
  }
  return out;
}

void write_predictions_csv(const std::vector<FilePrediction>& predictions, std::ostream& out) {
  const std::vector<std::string> header = {"file", "predicted_seconds", "baseline_seconds",
                                           "delta_seconds", "delta_percent"};
  csv::write_row(out, header);
  for (const auto& p : predictions) {
    const std::vector<std::string> row = {
        p.file_path, csv::format_double(p.predicted_seconds), csv::format_double(p.baseline_seconds),
        csv::format_double(p.delta_seconds), csv::format_double(p.delta_percent)};
    csv::write_row(out, row);
  }
}

}  // namespace perfimpact
