#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace perfimpact::testing {

std::filesystem::path fixture(const std::string& relative);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// git in `dir`; throws on a non-zero exit.
std::string git(const std::filesystem::path& dir, const std::vector<std::string>& args);

// Two-commit repository on branch "main": v1 and v2 tags, each with one
// Java source and a test script that sleeps briefly.
void make_fixture_repo(const std::filesystem::path& dir);

}  // namespace perfimpact::testing
