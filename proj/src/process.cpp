#include "perfimpact/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "perfimpact/errors.hpp"

namespace perfimpact {

namespace {

using Clock = std::chrono::steady_clock;

// Failures before exec are reported as an errno on `err_fd`, which is
// close-on-exec, so a successful exec shows up as EOF.
[[noreturn]] void child_fail(int err_fd) {
  const int e = errno;
  [[maybe_unused]] ssize_t n = write(err_fd, &e, sizeof e);
  _exit(127);
}

[[noreturn]] void child_exec(const std::vector<std::string>& argv, const ProcessOptions& options,
                             int out_fd, int err_fd) {
  setpgid(0, 0);
  if (!options.cwd.empty() && chdir(options.cwd.c_str()) != 0) child_fail(err_fd);
  int null_fd = open("/dev/null", O_RDWR);
  if (null_fd >= 0) dup2(null_fd, STDIN_FILENO);
  int target = out_fd >= 0 ? out_fd : null_fd;
  if (target >= 0) {
    dup2(target, STDOUT_FILENO);
    dup2(target, STDERR_FILENO);
  }
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  execvp(args[0], args.data());
  child_fail(err_fd);
}

int decode_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options) {
  if (argv.empty()) throw InvalidArgument("run_process: empty argv");

  int pipe_fds[2] = {-1, -1};
  if (options.capture && pipe(pipe_fds) != 0) {
    throw IoError(std::string("pipe: ") + std::strerror(errno));
  }

  int err_fds[2];
  if (pipe2(err_fds, O_CLOEXEC) != 0) throw IoError(std::string("pipe: ") + std::strerror(errno));

  const auto start = Clock::now();
  pid_t pid = fork();
  if (pid < 0) throw IoError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    if (pipe_fds[0] >= 0) close(pipe_fds[0]);
    close(err_fds[0]);
    child_exec(argv, options, pipe_fds[1], err_fds[1]);
  }
  setpgid(pid, pid);
  if (pipe_fds[1] >= 0) close(pipe_fds[1]);
  close(err_fds[1]);

  int child_errno = 0;
  ssize_t got;
  do {
    got = read(err_fds[0], &child_errno, sizeof child_errno);
  } while (got < 0 && errno == EINTR);
  close(err_fds[0]);
  if (got == sizeof child_errno) {
    int status = 0;
    waitpid(pid, &status, 0);
    if (pipe_fds[0] >= 0) close(pipe_fds[0]);
    throw IoError("cannot start '" + argv[0] + "': " + std::strerror(child_errno));
  }

  ProcessResult result;
  std::optional<Clock::time_point> deadline;
  if (options.timeout_seconds) {
    deadline = start + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(*options.timeout_seconds));
  }

  auto kill_and_throw = [&] {
    kill(-pid, SIGKILL);
    int status = 0;
    waitpid(pid, &status, 0);
    if (pipe_fds[0] >= 0) close(pipe_fds[0]);
    throw Timeout("'" + argv.back() + "' exceeded " + std::to_string(*options.timeout_seconds) +
                  " s");
  };

  // Drain the pipe until the child closes it, then reap.
  if (pipe_fds[0] >= 0) {
    char buf[4096];
    while (true) {
      int wait_ms = -1;
      if (deadline) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(*deadline - Clock::now());
        if (left.count() <= 0) kill_and_throw();
        wait_ms = static_cast<int>(left.count()) + 1;
      }
      pollfd pfd{pipe_fds[0], POLLIN, 0};
      int rc = poll(&pfd, 1, wait_ms);
      if (rc < 0) {
        if (errno == EINTR) continue;
        break;
      }
      if (rc == 0) continue;
      ssize_t n = read(pipe_fds[0], buf, sizeof buf);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      result.output.append(buf, static_cast<std::size_t>(n));
    }
    close(pipe_fds[0]);
    pipe_fds[0] = -1;
  }

  int status = 0;
  while (true) {
    pid_t rc = waitpid(pid, &status, deadline ? WNOHANG : 0);
    if (rc == pid) break;
    if (rc < 0 && errno != EINTR) throw IoError(std::string("waitpid: ") + std::strerror(errno));
    if (deadline && Clock::now() >= *deadline) kill_and_throw();
    if (rc == 0) usleep(1000);
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  result.exit_status = decode_status(status);
  return result;
}

ProcessResult run_shell(const std::string& command, const ProcessOptions& options) {
  return run_process({"/bin/sh", "-c", command}, options);
}

}  // namespace perfimpact
