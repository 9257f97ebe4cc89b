#include "perfimpact/git.hpp"

#include <iostream>
#include <sstream>

#include "perfimpact/errors.hpp"
#include "perfimpact/process.hpp"

namespace perfimpact {

namespace {

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

ProcessResult git(const std::filesystem::path& repo, const std::vector<std::string>& args) {
  std::vector<std::string> argv = {"git", "-C", repo.string()};
  argv.insert(argv.end(), args.begin(), args.end());
  return run_process(argv, {.cwd = {}, .timeout_seconds = std::nullopt, .capture = true});
}

}  // namespace

GitRepo::GitRepo(std::filesystem::path path) : path_(std::move(path)) {}

std::string GitRepo::run(const std::vector<std::string>& args) const {
  ProcessResult r = git(path_, args);
  if (r.exit_status != 0) {
    std::string command = "git";
    for (const auto& a : args) command += " " + a;
    throw GitError(command + " failed in " + path_.string() + ": " + trim(r.output));
  }
  return r.output;
}

bool GitRepo::is_repository() const {
  ProcessResult r = git(path_, {"rev-parse", "--is-inside-work-tree"});
  return r.exit_status == 0 && trim(r.output) == "true";
}

bool GitRepo::is_clean() const {
  return trim(run({"status", "--porcelain", "--untracked-files=no"})).empty();
}

std::string GitRepo::current_ref() const {
  ProcessResult r = git(path_, {"symbolic-ref", "-q", "--short", "HEAD"});
  if (r.exit_status == 0) return trim(r.output);
  return head_commit();
}

std::string GitRepo::head_commit() const { return trim(run({"rev-parse", "HEAD"})); }

std::string GitRepo::resolve(const std::string& id) const {
  ProcessResult r = git(path_, {"rev-parse", "--verify", "--quiet", id + "^{commit}"});
  if (r.exit_status != 0 || id.empty() || id.front() == '-') {
    throw UnknownSnapshot("cannot resolve snapshot '" + id + "' in " + path_.string());
  }
  return trim(r.output);
}

void GitRepo::checkout(const std::string& ref) const {
  run({"checkout", "--quiet", "--force", ref, "--"});
}

std::size_t GitRepo::commit_count(const std::string& ref) const {
  return std::stoul(trim(run({"rev-list", "--count", ref})));
}

std::vector<std::string> GitRepo::tracked_files() const { return lines_of(run({"ls-files"})); }

std::vector<std::string> GitRepo::changed_files(const std::string& base) const {
  return lines_of(run({"diff", "--name-only", resolve(base)}));
}

CheckoutGuard::CheckoutGuard(const GitRepo& repo) : repo_(repo), original_(repo.current_ref()) {}

CheckoutGuard::~CheckoutGuard() {
  try {
    repo_.checkout(original_);
  } catch (const std::exception& e) {
    std::cerr << "warning: could not restore " << original_ << ": " << e.what() << "\n";
  }
}

}  // namespace perfimpact
