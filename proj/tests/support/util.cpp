#include "util.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "perfimpact/process.hpp"

namespace perfimpact::testing {

namespace fs = std::filesystem;

fs::path fixture(const std::string& relative) { return fs::path(PERFIMPACT_FIXTURES) / relative; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "perfimpact-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string git(const fs::path& dir, const std::vector<std::string>& args) {
  std::vector<std::string> argv = {"git", "-c", "user.name=fixture", "-c",
                                   "user.email=fixture@example.com", "-c", "commit.gpgsign=false"};
  argv.insert(argv.end(), args.begin(), args.end());
  ProcessOptions opts;
  opts.cwd = dir;
  const ProcessResult r = run_process(argv, opts);
  if (r.exit_status != 0) throw std::runtime_error("git failed: " + r.output);
  return r.output;
}

void make_fixture_repo(const fs::path& dir) {
  fs::create_directories(dir);
  git(dir, {"init", "--quiet"});
  git(dir, {"checkout", "--quiet", "-b", "main"});
  write_file(dir / "src/App.java",
             "public class App {\n  int run(int x) {\n    return x + 1;\n  }\n}\n");
  write_file(dir / "run_tests.sh", "#!/bin/sh\nsleep 0.05\n");
  git(dir, {"add", "."});
  git(dir, {"commit", "--quiet", "-m", "first"});
  git(dir, {"tag", "v1"});
  write_file(dir / "src/App.java",
             "public class App {\n  int run(int x) {\n    if (x > 0) {\n      return x + 1;\n    }\n"
             "    return 0;\n  }\n}\n");
  git(dir, {"commit", "--quiet", "-am", "second"});
  git(dir, {"tag", "v2"});
}

}  // namespace perfimpact::testing
