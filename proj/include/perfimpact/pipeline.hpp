#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "perfimpact/dataset.hpp"
#include "perfimpact/harness.hpp"
#include "perfimpact/regress.hpp"
#include "perfimpact/report.hpp"
#include "perfimpact/stylometry.hpp"

namespace perfimpact {

// .java files below `root` (or `root` itself), paths relative to `root`,
// sorted. Hidden directories are not entered.
std::vector<SourceFile> load_java_files(const std::filesystem::path& root);

struct SnapshotSources {
  std::string snapshot;
  std::vector<SourceFile> files;
};

// Extracts every snapshot against one shared corpus context, so the
// corpus-dependent columns agree across snapshots.
struct ExtractionResult {
  std::shared_ptr<const FeatureSchema> schema;
  std::vector<SnapshotFeatures> snapshots;
  std::vector<std::pair<std::string, SkippedFile>> skipped;  // (snapshot, file)
};
ExtractionResult extract_snapshots(const std::vector<SnapshotSources>& sources,
                                   const FeatureSchema& schema, const CbowConfig& cbow = {});

// file,snapshot,<columns>
void write_features_csv(const ExtractionResult& extraction, std::ostream& out);
// file,snapshot,<columns> holding the pre-transform counts where a column has one.
void write_raw_counts_csv(const ExtractionResult& extraction, std::ostream& out);
// Inverse of write_features_csv; snapshots keep their first-appearance order.
ExtractionResult read_features_csv(std::istream& in);

struct DatasetBuild {
  Dataset dataset;
  std::vector<std::string> warnings;
};
DatasetBuild build_dataset(const ExtractionResult& features,
                           const std::vector<TimingRecord>& timings, bool group_by_snapshot);

enum class GroupSplit { Row, Snapshot };

struct Evaluation {
  EvalReport report;
  TrainedModel best_model;  // best kind refitted on every row
};
Evaluation evaluate_dataset(const Dataset& dataset, int k, std::uint64_t seed, GroupSplit split);

struct FilePrediction {
  std::string file_path;
  double predicted_seconds = 0.0;
  double baseline_seconds = 0.0;
  double delta_seconds = 0.0;
  double delta_percent = 0.0;
};

// Features of `files` under the model's columns, then predictions against the
// model's "baseline_test_seconds" metadata. Throws InvalidArgument for
// columns that need a trained embedding.
std::vector<FilePrediction> predict_files(const TrainedModel& model,
                                          const std::vector<SourceFile>& files);

void write_predictions_csv(const std::vector<FilePrediction>& predictions, std::ostream& out);

}  // namespace perfimpact
