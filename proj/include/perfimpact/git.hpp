#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace perfimpact {

// Thin wrapper over the git command line. Every failure is a GitError
// carrying git's own message.
class GitRepo {
 public:
  explicit GitRepo(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }

  bool is_repository() const;
  // No staged or unstaged changes to tracked files.
  bool is_clean() const;
  // Branch name when HEAD is attached, commit hash otherwise.
  std::string current_ref() const;
  std::string head_commit() const;
  // Full hash of a commit-ish; throws UnknownSnapshot.
  std::string resolve(const std::string& id) const;
  void checkout(const std::string& ref) const;
  std::size_t commit_count(const std::string& ref = "HEAD") const;
  std::vector<std::string> tracked_files() const;
  // Tracked paths that differ between `base` and the working tree.
  std::vector<std::string> changed_files(const std::string& base) const;

  std::string run(const std::vector<std::string>& args) const;

 private:
  std::filesystem::path path_;
};

// Restores the checkout found at construction when destroyed.
class CheckoutGuard {
 public:
  explicit CheckoutGuard(const GitRepo& repo);
  ~CheckoutGuard();
  CheckoutGuard(const CheckoutGuard&) = delete;
  CheckoutGuard& operator=(const CheckoutGuard&) = delete;

  const std::string& original() const { return original_; }

 private:
  const GitRepo& repo_;
  std::string original_;
};

}  // namespace perfimpact
