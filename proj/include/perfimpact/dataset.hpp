#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "perfimpact/harness.hpp"
#include "perfimpact/stylometry.hpp"

namespace perfimpact {

inline constexpr const char* kTargetColumn = "Test(sec)";

struct DatasetRow {
  std::string file_path;
  std::string snapshot;
  std::vector<double> values;

  bool operator==(const DatasetRow&) const = default;
};

struct Dataset {
  std::shared_ptr<const FeatureSchema> schema;
  std::vector<DatasetRow> rows;
  std::vector<double> target;
  std::map<std::string, std::string> provenance;  // written to the sidecar only

  std::size_t size() const { return rows.size(); }
  std::size_t width() const { return schema ? schema->size() : 0; }
  Eigen::MatrixXd features() const;  // rows() x width()
  Eigen::VectorXd targets() const;
  std::vector<std::string> snapshots() const;  // per row

  // Finite values, matching lengths, unique (file, snapshot) pairs.
  void validate() const;  // throws InvalidArgument / NonFiniteInput

  // Schema columns, rows and targets; provenance is ignored.
  bool operator==(const Dataset& other) const;
};

struct SnapshotFeatures {
  std::string snapshot;
  std::vector<FeatureVector> vectors;
};

// One row per (file, snapshot), targeted by the snapshot's test_seconds.
// Snapshots whose timing failed or that have no vectors are left out with a
// warning. Throws MissingTiming when a snapshot has no record at all and
// SchemaMismatch when the vectors disagree on columns.
Dataset assemble(std::span<const SnapshotFeatures> features,
                 const std::map<std::string, TimingRecord>& timings,
                 std::vector<std::string>* warnings = nullptr);

// Mean feature vector per snapshot; file_path of each row is "*".
Dataset group_by_snapshot(const Dataset& dataset);

// Header file,snapshot,<columns>,Test(sec). Numbers are written with the
// shortest text that reads back to the identical double.
void write_csv(const Dataset& dataset, std::ostream& out);
// Also writes "<path>.meta" (key = value provenance, digest, created).
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

// Throws SchemaMismatch on a malformed header, or when `expected` is given
// and the header columns differ from it.
Dataset read_csv(std::istream& in, const FeatureSchema* expected = nullptr);
Dataset read_csv(const std::filesystem::path& path, const FeatureSchema* expected = nullptr);

std::map<std::string, std::string> read_metadata(const std::filesystem::path& path);

// 64-bit FNV-1a of the CSV serialization, as 16 hex digits.
std::string dataset_digest(const Dataset& dataset);
std::string fnv1a_hex(std::string_view bytes);

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // fold index per row
  std::uint64_t seed = 0;

  std::vector<std::size_t> sizes() const;
  std::vector<std::size_t> test_rows(int fold) const;
  std::vector<std::size_t> train_rows(int fold) const;
};

// Rank-based quantile bins (min(k, distinct targets) of them), shuffled
// within each bin and dealt round-robin with one counter across bins, so
// fold sizes differ by at most one. Throws TooFewRows when k > n and
// InvalidArgument when k < 2.
FoldPlan kfold_stratified(std::span<const double> target, int k, std::uint64_t seed);
FoldPlan kfold_stratified(const Dataset& dataset, int k, std::uint64_t seed);

// Whole groups per fold (each group goes to the currently smallest fold).
// k is clamped to the number of groups; fewer than 2 groups is TooFewRows.
FoldPlan kfold_grouped(std::span<const std::string> groups, int k, std::uint64_t seed);

}  // namespace perfimpact
