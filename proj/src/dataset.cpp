#include "perfimpact/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "perfimpact/csv.hpp"
#include "perfimpact/errors.hpp"
#include "perfimpact/random.hpp"

namespace perfimpact {

namespace {

void warn(std::vector<std::string>* warnings, std::string message) {
  std::cerr << "warning: " << message << "\n";
  if (warnings) warnings->push_back(std::move(message));
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

Eigen::MatrixXd Dataset::features() const {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].values.size(); ++j) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
    }
  }
  return X;
}

Eigen::VectorXd Dataset::targets() const {
  return Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(target.size()));
}

std::vector<std::string> Dataset::snapshots() const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.snapshot);
  return out;
}

void Dataset::validate() const {
  if (!schema) throw InvalidArgument("dataset has no schema");
  if (rows.size() != target.size()) throw InvalidArgument("rows and target differ in length");
  std::set<std::pair<std::string, std::string>> keys;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.values.size() != schema->size()) {
      throw InvalidArgument("row " + std::to_string(i) + " has " + std::to_string(r.values.size()) +
                            " values, schema has " + std::to_string(schema->size()));
    }
    for (double v : r.values) {
      if (!std::isfinite(v)) throw NonFiniteInput("non-finite feature in row " + std::to_string(i));
    }
    if (!std::isfinite(target[i])) {
      throw NonFiniteInput("non-finite target in row " + std::to_string(i));
    }
    if (!keys.emplace(r.file_path, r.snapshot).second) {
      throw InvalidArgument("duplicate row for " + r.file_path + " @ " + r.snapshot);
    }
  }
}

bool Dataset::operator==(const Dataset& other) const {
  const bool same_schema = (schema && other.schema) ? *schema == *other.schema
                                                    : schema == other.schema;
  return same_schema && rows == other.rows && target == other.target;
}

Dataset assemble(std::span<const SnapshotFeatures> features,
                 const std::map<std::string, TimingRecord>& timings,
                 std::vector<std::string>* warnings) {
  Dataset ds;
  for (const auto& sf : features) {
    auto timing = timings.find(sf.snapshot);
    if (timing == timings.end()) {
      throw MissingTiming("no timing record for snapshot '" + sf.snapshot + "'");
    }
    if (!timing->second.ok()) {
      warn(warnings, "snapshot '" + sf.snapshot + "' excluded: timing exit status " +
                         std::to_string(timing->second.exit_status));
      continue;
    }
    if (sf.vectors.empty()) {
      warn(warnings, EmptySnapshot("snapshot '" + sf.snapshot + "' has no parseable files").what());
      continue;
    }
    for (const auto& fv : sf.vectors) {
      if (!ds.schema) {
        ds.schema = fv.schema;
      } else if (fv.schema != ds.schema && !(*fv.schema == *ds.schema)) {
        throw SchemaMismatch(fv.file_path + " @ " + sf.snapshot +
                             " was extracted with different columns");
      }
      ds.rows.push_back({fv.file_path, sf.snapshot, fv.values});
      ds.target.push_back(timing->second.test_seconds);
    }
  }
  if (!ds.schema) ds.schema = std::make_shared<const FeatureSchema>(FeatureSchema::paper13());
  ds.validate();
  return ds;
}

Dataset group_by_snapshot(const Dataset& dataset) {
  Dataset out;
  out.schema = dataset.schema;
  out.provenance = dataset.provenance;
  out.provenance["grouped_by"] = "snapshot";
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
  std::map<std::string, double> target;
  for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
    const auto& r = dataset.rows[i];
    auto [it, inserted] = sums.try_emplace(r.snapshot, std::vector<double>(r.values.size(), 0.0), 0);
    if (inserted) {
      order.push_back(r.snapshot);
      target[r.snapshot] = dataset.target[i];
    }
    for (std::size_t j = 0; j < r.values.size(); ++j) it->second.first[j] += r.values[j];
    ++it->second.second;
  }
  for (const auto& snap : order) {
    auto& [sum, n] = sums[snap];
    for (double& v : sum) v /= static_cast<double>(n);
    out.rows.push_back({"*", snap, sum});
    out.target.push_back(target[snap]);
  }
  return out;
}

void write_csv(const Dataset& dataset, std::ostream& out) {
  dataset.validate();
  std::vector<std::string> fields = {"file", "snapshot"};
  for (const auto& name : dataset.schema->column_names()) fields.push_back(name);
  fields.push_back(kTargetColumn);
  csv::write_row(out, fields);
  for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
    const auto& r = dataset.rows[i];
    fields.clear();
    fields.push_back(r.file_path);
    fields.push_back(r.snapshot);
    for (double v : r.values) fields.push_back(csv::format_double(v));
    fields.push_back(csv::format_double(dataset.target[i]));
    csv::write_row(out, fields);
  }
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ostringstream text;
  write_csv(dataset, text);
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text.str();
    if (!out) throw IoError("error writing " + path.string());
  }
  std::map<std::string, std::string> meta = dataset.provenance;
  meta["rows"] = std::to_string(dataset.size());
  meta["columns"] = std::to_string(dataset.width());
  meta["schema"] = dataset.schema->profile().empty() ? "custom" : dataset.schema->profile();
  meta["digest"] = fnv1a_hex(text.str());
  meta["created"] = utc_timestamp();
  std::ofstream side(path.string() + ".meta", std::ios::binary);
  if (!side) throw IoError("cannot write " + path.string() + ".meta");
  for (const auto& [key, value] : meta) side << key << " = " << value << "\n";
}

Dataset read_csv(std::istream& in, const FeatureSchema* expected) {
  auto rows = csv::read_all(in);
  if (rows.empty()) throw SchemaMismatch("dataset CSV is empty");
  const auto& header = rows[0];
  if (header.size() < 4 || header[0] != "file" || header[1] != "snapshot" ||
      header.back() != kTargetColumn) {
    throw SchemaMismatch("dataset header must be file,snapshot,<columns>," +
                         std::string(kTargetColumn));
  }
  std::vector<std::string> columns(header.begin() + 2, header.end() - 1);
  if (expected && columns != expected->column_names()) {
    throw SchemaMismatch("dataset columns differ from the " + expected->profile() + " schema");
  }
  Dataset ds;
  ds.schema = std::make_shared<const FeatureSchema>(FeatureSchema::from_column_names(columns));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) {
      throw SchemaMismatch("dataset row " + std::to_string(i + 1) + " has " +
                           std::to_string(row.size()) + " fields, header has " +
                           std::to_string(header.size()));
    }
    DatasetRow r{row[0], row[1], {}};
    for (std::size_t j = 2; j + 1 < row.size(); ++j) r.values.push_back(csv::parse_double(row[j]));
    ds.rows.push_back(std::move(r));
    ds.target.push_back(csv::parse_double(row.back()));
  }
  ds.validate();
  return ds;
}

Dataset read_csv(const std::filesystem::path& path, const FeatureSchema* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  Dataset ds = read_csv(in, expected);
  if (std::filesystem::exists(path.string() + ".meta")) ds.provenance = read_metadata(path);
  return ds;
}

std::map<std::string, std::string> read_metadata(const std::filesystem::path& path) {
  std::ifstream in(path.string() + ".meta");
  std::map<std::string, std::string> meta;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    meta[trim(std::string_view(line).substr(0, eq))] = trim(std::string_view(line).substr(eq + 1));
  }
  return meta;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string dataset_digest(const Dataset& dataset) {
  std::ostringstream text;
  write_csv(dataset, text);
  return fnv1a_hex(text.str());
}

std::vector<std::size_t> FoldPlan::sizes() const {
  std::vector<std::size_t> out(static_cast<std::size_t>(k), 0);
  for (int f : assignments) ++out[static_cast<std::size_t>(f)];
  return out;
}

std::vector<std::size_t> FoldPlan::test_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

FoldPlan kfold_stratified(std::span<const double> target, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("k must be at least 2");
  const std::size_t n = target.size();
  if (static_cast<std::size_t>(k) > n) {
    throw TooFewRows("k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " rows");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return target[a] < target[b]; });
  std::size_t distinct = n ? 1 : 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (target[order[i]] != target[order[i - 1]]) ++distinct;
  }
  const std::size_t bins = std::min<std::size_t>(static_cast<std::size_t>(k), distinct);

  Rng rng(seed);
  FoldPlan plan{k, std::vector<int>(n, 0), seed};
  std::size_t dealt = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = b * n / bins;
    const std::size_t hi = (b + 1) * n / bins;
    std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                     order.begin() + static_cast<std::ptrdiff_t>(hi));
    rng.shuffle(std::span(members));
    for (std::size_t row : members) {
      plan.assignments[row] = static_cast<int>(dealt % static_cast<std::size_t>(k));
      ++dealt;
    }
  }
  return plan;
}

FoldPlan kfold_stratified(const Dataset& dataset, int k, std::uint64_t seed) {
  return kfold_stratified(std::span<const double>(dataset.target), k, seed);
}

FoldPlan kfold_grouped(std::span<const std::string> groups, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("k must be at least 2");
  std::vector<std::string> names;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto [it, inserted] = members.try_emplace(groups[i]);
    if (inserted) names.push_back(groups[i]);
    it->second.push_back(i);
  }
  if (names.size() < 2) throw TooFewRows("group split needs at least 2 groups");
  k = std::min<int>(k, static_cast<int>(names.size()));

  Rng rng(seed);
  rng.shuffle(std::span(names));
  FoldPlan plan{k, std::vector<int>(groups.size(), 0), seed};
  std::vector<std::size_t> load(static_cast<std::size_t>(k), 0);
  for (const auto& name : names) {
    const auto fold = static_cast<std::size_t>(
        std::min_element(load.begin(), load.end()) - load.begin());
    for (std::size_t row : members[name]) plan.assignments[row] = static_cast<int>(fold);
    load[fold] += members[name].size();
  }
  return plan;
}

}  // namespace perfimpact
