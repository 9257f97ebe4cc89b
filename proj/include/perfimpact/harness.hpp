#pragma once

#include <algorithm>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "perfimpact/errors.hpp"
#include "perfimpact/git.hpp"

namespace perfimpact {

struct Snapshot {
  std::string id;
  std::string label;
  int checkout_order = 0;
};

struct RunConfig {
  std::filesystem::path repo_path;
  std::vector<Snapshot> snapshots;
  std::string build_command;
  std::string test_command;
  int repetitions = 3;
  int warmup_runs = 1;
  double timeout_seconds = 600.0;
  std::optional<std::string> report_glob;  // relative to repo_path

  void validate() const;  // throws ConfigError
};

// `key = value` lines; each `[snapshot]` section opens a new Snapshot with
// keys id, label and checkout_order. '#' and ';' start comment lines.
// A relative repo_path is resolved against `base_dir`.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

struct TimingRecord {
  std::string snapshot;
  double build_seconds = 0.0;
  double test_seconds = 0.0;  // median of repetition_values
  std::map<std::string, double> per_test_seconds;
  std::vector<double> repetition_values;
  int exit_status = 0;  // build status if the build failed, else final test repetition
  std::vector<std::string> warnings;

  bool ok() const { return exit_status == 0; }
};

double median(std::vector<double> values);  // 0 for an empty list

// Builds once, runs the test command warmup_runs + repetitions times in
// `workdir` (repo_path when empty). Throws Timeout.
TimingRecord time_tests(const RunConfig& config, const std::string& snapshot_id = {},
                        const std::filesystem::path& workdir = {});

// JUnit-style XML: every <testcase> mapped "classname.name" -> time.
// Malformed or testcase-free reports produce a warning and an empty map.
// Throws IoError when the file cannot be read.
std::map<std::string, double> parse_test_report(const std::filesystem::path& path,
                                                std::vector<std::string>* warnings = nullptr);
std::map<std::string, double> parse_test_report_text(const std::string& xml,
                                                     std::vector<std::string>* warnings = nullptr);

// Files under `root` matching a glob(3) pattern relative to it, sorted.
std::vector<std::filesystem::path> glob_files(const std::filesystem::path& root,
                                              const std::string& pattern);

// snapshot,build_seconds,test_seconds,exit_status,rep_values
void write_timings_csv(const std::vector<TimingRecord>& records, std::ostream& out);
std::vector<TimingRecord> read_timings_csv(std::istream& in);

template <class Result>
struct SnapshotOutcome {
  Snapshot snapshot;
  std::optional<Result> result;
  std::string error_name;  // empty on success
  std::string error_message;

  bool ok() const { return result.has_value(); }
};

// Checks out each snapshot of `config` in checkout_order and calls
// visitor(snapshot, repo_path). Errors raised for one snapshot (including
// UnknownSnapshot) are recorded in its outcome. The original checkout is
// restored before returning or throwing. Throws DirtyWorkingTree.
template <class Visitor>
auto walk_history(const RunConfig& config, Visitor&& visitor)
    -> std::vector<SnapshotOutcome<std::invoke_result_t<Visitor&, const Snapshot&,
                                                         const std::filesystem::path&>>> {
  using Result =
      std::invoke_result_t<Visitor&, const Snapshot&, const std::filesystem::path&>;
  std::vector<SnapshotOutcome<Result>> outcomes;
  if (config.snapshots.empty()) return outcomes;

  GitRepo repo(config.repo_path);
  if (!repo.is_repository()) throw GitError(config.repo_path.string() + " is not a git work tree");
  if (!repo.is_clean()) {
    throw DirtyWorkingTree(config.repo_path.string() + " has uncommitted changes");
  }

  std::vector<Snapshot> ordered = config.snapshots;
  std::stable_sort(ordered.begin(), ordered.end(), [](const Snapshot& a, const Snapshot& b) {
    return a.checkout_order < b.checkout_order;
  });

  CheckoutGuard guard(repo);
  for (const Snapshot& snapshot : ordered) {
    SnapshotOutcome<Result> outcome{snapshot, std::nullopt, {}, {}};
    try {
      repo.checkout(repo.resolve(snapshot.id));
      outcome.result.emplace(visitor(snapshot, config.repo_path));
    } catch (const Error& e) {
      outcome.error_name = e.name();
      outcome.error_message = e.what();
    } catch (const std::exception& e) {
      outcome.error_name = "Error";
      outcome.error_message = e.what();
    }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

struct PreflightCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Repository checklist: java (extension census), compilable, has_tests,
// history_depth (at least max(2, snapshot count) commits).
std::vector<PreflightCheck> preflight(const RunConfig& config);

}  // namespace perfimpact
