#include "perfimpact/harness.hpp"

#include <glob.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "perfimpact/csv.hpp"
#include "perfimpact/process.hpp"

namespace perfimpact {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

int parse_config_int(const std::string& key, const std::string& value, std::size_t line) {
  try {
    return static_cast<int>(csv::parse_int(value));
  } catch (const InvalidArgument&) {
    throw ConfigError("line " + std::to_string(line) + ": " + key + " must be an integer");
  }
}

void warn(std::vector<std::string>* warnings, std::string message) {
  std::cerr << "warning: " << message << "\n";
  if (warnings) warnings->push_back(std::move(message));
}

void collect_testcases(const pt::ptree& node, std::map<std::string, double>& out,
                       std::size_t& seen) {
  for (const auto& [key, child] : node) {
    if (key == "<xmlattr>" || key == "<xmlcomment>") continue;
    if (key == "testcase") {
      ++seen;
      const std::string name = child.get<std::string>("<xmlattr>.name", "");
      const std::string classname = child.get<std::string>("<xmlattr>.classname", "");
      const std::string time = trim(child.get<std::string>("<xmlattr>.time", ""));
      double seconds = 0.0;
      if (!time.empty()) {
        std::string digits;
        for (char c : time) {
          if (c != ',') digits += c;  // some reporters group thousands
        }
        seconds = csv::parse_double(digits);
      }
      out[classname.empty() ? name : classname + "." + name] = seconds;
    }
    collect_testcases(child, out, seen);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (repo_path.empty()) throw ConfigError("repo_path is required");
  if (test_command.empty()) throw ConfigError("test_command is required");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (warmup_runs < 0) throw ConfigError("warmup_runs must be >= 0");
  if (!(timeout_seconds > 0.0) || !std::isfinite(timeout_seconds)) {
    throw ConfigError("timeout_seconds must be > 0");
  }
  std::set<std::string> ids;
  for (const auto& s : snapshots) {
    if (s.id.empty()) throw ConfigError("snapshot without id");
    if (!ids.insert(s.id).second) throw ConfigError("duplicate snapshot id '" + s.id + "'");
  }
}

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir) {
  RunConfig config;
  std::string raw;
  std::size_t line_no = 0;
  Snapshot* current = nullptr;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line != "[snapshot]") {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown section " + line);
      }
      config.snapshots.push_back({});
      current = &config.snapshots.back();
      current->checkout_order = static_cast<int>(config.snapshots.size()) - 1;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = unquote(trim(std::string_view(line).substr(eq + 1)));

    if (current) {
      if (key == "id") {
        current->id = value;
      } else if (key == "label") {
        current->label = value;
      } else if (key == "checkout_order") {
        current->checkout_order = parse_config_int(key, value, line_no);
      } else {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown snapshot key '" + key + "'");
      }
      continue;
    }
    if (key == "repo_path") {
      config.repo_path = value;
    } else if (key == "build_command") {
      config.build_command = value;
    } else if (key == "test_command") {
      config.test_command = value;
    } else if (key == "repetitions") {
      config.repetitions = parse_config_int(key, value, line_no);
    } else if (key == "warmup_runs") {
      config.warmup_runs = parse_config_int(key, value, line_no);
    } else if (key == "timeout_seconds") {
      try {
        config.timeout_seconds = csv::parse_double(value);
      } catch (const InvalidArgument&) {
        throw ConfigError("line " + std::to_string(line_no) + ": timeout_seconds must be a number");
      }
    } else if (key == "report_glob") {
      if (!value.empty()) config.report_glob = value;
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  for (auto& s : config.snapshots) {
    if (s.label.empty()) s.label = s.id;
  }
  if (config.repo_path.is_relative() && !base_dir.empty()) {
    config.repo_path = base_dir / config.repo_path;
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  return parse_run_config(in, path.parent_path());
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return (values[mid - 1] + values[mid]) / 2.0;
}

TimingRecord time_tests(const RunConfig& config, const std::string& snapshot_id,
                        const std::filesystem::path& workdir) {
  const std::filesystem::path cwd = workdir.empty() ? config.repo_path : workdir;
  const ProcessOptions options{.cwd = cwd, .timeout_seconds = config.timeout_seconds,
                               .capture = false};
  TimingRecord record;
  record.snapshot = snapshot_id;

  if (!config.build_command.empty()) {
    ProcessResult build = run_shell(config.build_command, options);
    record.build_seconds = build.seconds;
    if (build.exit_status != 0) {
      record.exit_status = build.exit_status;
      record.warnings.push_back("build failed with status " + std::to_string(build.exit_status));
      return record;
    }
  }

  for (int i = 0; i < config.warmup_runs; ++i) run_shell(config.test_command, options);
  for (int i = 0; i < config.repetitions; ++i) {
    ProcessResult run = run_shell(config.test_command, options);
    record.repetition_values.push_back(run.seconds);
    record.exit_status = run.exit_status;
  }
  record.test_seconds = median(record.repetition_values);

  if (config.report_glob) {
    for (const auto& report : glob_files(cwd, *config.report_glob)) {
      for (const auto& [name, seconds] : parse_test_report(report, &record.warnings)) {
        record.per_test_seconds[name] = seconds;
      }
    }
    double sum = 0.0;
    for (const auto& [name, seconds] : record.per_test_seconds) sum += seconds;
    if (sum > record.test_seconds * 1.5) {
      warn(&record.warnings, "per-test times sum to " + std::to_string(sum) +
                                 " s, more than 1.5x the measured " +
                                 std::to_string(record.test_seconds) + " s");
    }
  }
  return record;
}

std::map<std::string, double> parse_test_report_text(const std::string& xml,
                                                     std::vector<std::string>* warnings) {
  std::map<std::string, double> out;
  pt::ptree tree;
  try {
    std::istringstream in(xml);
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    warn(warnings, MalformedReport(std::string("not well-formed XML: ") + e.what()).what());
    return out;
  }
  std::size_t seen = 0;
  try {
    collect_testcases(tree, out, seen);
  } catch (const InvalidArgument& e) {
    warn(warnings, std::string("malformed testcase time: ") + e.what());
    return {};
  }
  if (seen == 0) warn(warnings, "report contains no testcase elements");
  return out;
}

std::map<std::string, double> parse_test_report(const std::filesystem::path& path,
                                                std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read report " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::vector<std::string> local;
  auto result = parse_test_report_text(ss.str(), &local);
  for (auto& w : local) {
    if (warnings) warnings->push_back(path.string() + ": " + w);
  }
  return result;
}

std::vector<std::filesystem::path> glob_files(const std::filesystem::path& root,
                                              const std::string& pattern) {
  const std::filesystem::path full =
      std::filesystem::path(pattern).is_absolute() ? std::filesystem::path(pattern) : root / pattern;
  glob_t g{};
  std::vector<std::filesystem::path> out;
  if (glob(full.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  std::sort(out.begin(), out.end());
  return out;
}

void write_timings_csv(const std::vector<TimingRecord>& records, std::ostream& out) {
  const std::vector<std::string> header = {"snapshot", "build_seconds", "test_seconds",
                                           "exit_status", "rep_values"};
  csv::write_row(out, header);
  for (const auto& r : records) {
    std::string reps;
    for (std::size_t i = 0; i < r.repetition_values.size(); ++i) {
      if (i) reps += ';';
      reps += csv::format_double(r.repetition_values[i]);
    }
    const std::vector<std::string> row = {r.snapshot, csv::format_double(r.build_seconds),
                                          csv::format_double(r.test_seconds),
                                          std::to_string(r.exit_status), reps};
    csv::write_row(out, row);
  }
}

std::vector<TimingRecord> read_timings_csv(std::istream& in) {
  auto rows = csv::read_all(in);
  const csv::Row header = {"snapshot", "build_seconds", "test_seconds", "exit_status",
                           "rep_values"};
  if (rows.empty() || rows[0] != header) {
    throw SchemaMismatch("timing CSV header must be snapshot,build_seconds,test_seconds,"
                         "exit_status,rep_values");
  }
  std::vector<TimingRecord> records;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) {
      throw SchemaMismatch("timing CSV row " + std::to_string(i + 1) + " has " +
                           std::to_string(row.size()) + " fields");
    }
    TimingRecord r;
    r.snapshot = row[0];
    r.build_seconds = csv::parse_double(row[1]);
    r.test_seconds = csv::parse_double(row[2]);
    r.exit_status = static_cast<int>(csv::parse_int(row[3]));
    std::string_view reps = row[4];
    while (!reps.empty()) {
      const auto semi = reps.find(';');
      r.repetition_values.push_back(csv::parse_double(reps.substr(0, semi)));
      if (semi == std::string_view::npos) break;
      reps.remove_prefix(semi + 1);
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<PreflightCheck> preflight(const RunConfig& config) {
  std::vector<PreflightCheck> checks;
  GitRepo repo(config.repo_path);
  const bool is_repo = repo.is_repository();

  {
    PreflightCheck c{"java", false, {}};
    std::map<std::string, std::size_t> census;
    if (is_repo) {
      for (const auto& f : repo.tracked_files()) {
        const std::string ext = std::filesystem::path(f).extension().string();
        if (!ext.empty()) ++census[ext];
      }
    }
    const std::size_t java = census.count(".java") ? census[".java"] : 0;
    static const std::set<std::string> other_sources = {
        ".c", ".cc", ".cpp", ".cs", ".go", ".js", ".kt", ".py", ".rb", ".rs", ".scala", ".ts"};
    std::size_t largest_other = 0;
    std::string other_name;
    for (const auto& [ext, n] : census) {
      if (other_sources.count(ext) && n > largest_other) {
        largest_other = n;
        other_name = ext;
      }
    }
    c.passed = java > 0 && java >= largest_other;
    c.detail = std::to_string(java) + " .java files";
    if (largest_other) c.detail += ", " + std::to_string(largest_other) + " " + other_name;
    checks.push_back(c);
  }

  const ProcessOptions options{.cwd = config.repo_path,
                               .timeout_seconds = config.timeout_seconds, .capture = true};
  {
    PreflightCheck c{"compilable", false, {}};
    if (config.build_command.empty()) {
      c.passed = true;
      c.detail = "no build_command";
    } else {
      try {
        ProcessResult r = run_shell(config.build_command, options);
        c.passed = r.exit_status == 0;
        c.detail = "build exit status " + std::to_string(r.exit_status);
      } catch (const Error& e) {
        c.detail = e.what();
      }
    }
    checks.push_back(c);
  }
  {
    PreflightCheck c{"has_tests", false, {}};
    try {
      ProcessResult r = run_shell(config.test_command, options);
      std::size_t tests = 0;
      if (config.report_glob) {
        for (const auto& report : glob_files(config.repo_path, *config.report_glob)) {
          tests += parse_test_report(report).size();
        }
        c.passed = r.exit_status == 0 && tests >= 1;
        c.detail = std::to_string(tests) + " test cases reported";
      } else {
        c.passed = r.exit_status == 0;
        c.detail = "test exit status " + std::to_string(r.exit_status) + " (no report_glob)";
      }
    } catch (const Error& e) {
      c.detail = e.what();
    }
    checks.push_back(c);
  }
  {
    PreflightCheck c{"history_depth", false, {}};
    const std::size_t needed = std::max<std::size_t>(2, config.snapshots.size());
    if (is_repo) {
      try {
        const std::size_t depth = repo.commit_count();
        c.passed = depth >= needed;
        c.detail = std::to_string(depth) + " commits, need " + std::to_string(needed);
      } catch (const Error& e) {
        c.detail = e.what();
      }
    } else {
      c.detail = "not a git repository";
    }
    checks.push_back(c);
  }
  return checks;
}

}  // namespace perfimpact
