#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace perfimpact {

struct ProcessResult {
  int exit_status = 0;  // 128 + signal number when killed by a signal
  double seconds = 0.0;  // wall time on the steady clock
  std::string output;    // stdout and stderr interleaved, when captured
};

struct ProcessOptions {
  std::filesystem::path cwd;
  std::optional<double> timeout_seconds;
  bool capture = true;  // otherwise output goes to /dev/null
};

// Runs argv[0] from PATH. Throws Timeout (after killing the process group)
// when the timeout elapses, IoError when the process cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options);

// `/bin/sh -c command`.
ProcessResult run_shell(const std::string& command, const ProcessOptions& options);

}  // namespace perfimpact
