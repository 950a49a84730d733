/// \file process.hpp
/// \brief Child-process execution with wall-clock timeout and group kill.

#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chcfuzz {

/// Harness-level failure (binary missing, fork/pipe failure). Distinct from
/// solver crashes, which are data and reported through ProcessResult.
class ProcessError : public std::runtime_error {
 public:
  explicit ProcessError(const std::string& what) : std::runtime_error(what) {}
};

struct ProcessResult {
  std::string out;
  std::string err;
  int exit_code = -1;      // valid when !signaled
  int term_signal = 0;     // nonzero when killed by a signal
  bool signaled = false;
  bool timed_out = false;  // we killed the process group at the deadline
  double wall_seconds = 0.0;
};

/// Runs argv[0] with the given arguments, optional stdin data and working
/// directory, killing the whole process group after `timeout_seconds`.
inline ProcessResult run_process(const std::vector<std::string>& argv,
                                 double timeout_seconds,
                                 const std::string& stdin_data = "",
                                 const std::string& workdir = "") {
  if (argv.empty()) throw ProcessError("empty argv");

  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (pipe(in_pipe) || pipe(out_pipe) || pipe(err_pipe))
    throw ProcessError(std::string("pipe: ") + std::strerror(errno));

  auto start = std::chrono::steady_clock::now();
  pid_t pid = fork();
  if (pid < 0) throw ProcessError(std::string("fork: ") + std::strerror(errno));

  if (pid == 0) {
    // Child: own process group so the parent can kill the whole tree.
    setpgid(0, 0);
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[0]);
    close(err_pipe[1]);
    if (!workdir.empty() && chdir(workdir.c_str()) != 0) _exit(126);
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    execvp(cargv[0], cargv.data());
    _exit(127);
  }

  setpgid(pid, pid);  // also from the parent side to close the race
  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);

  // Feed stdin (nonblocking; the child may never read it).
  fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);
  size_t in_off = 0;

  fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
  fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

  ProcessResult res;
  bool out_open = true, err_open = true;
  bool in_open = !stdin_data.empty();
  if (!in_open) close(in_pipe[1]);

  auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(timeout_seconds));
  bool child_done = false;
  int status = 0;

  auto drain = [&](int fd, std::string& into, bool& open_flag) {
    char buf[65536];
    for (;;) {
      ssize_t n = read(fd, buf, sizeof buf);
      if (n > 0) {
        into.append(buf, static_cast<size_t>(n));
      } else if (n == 0) {
        close(fd);
        open_flag = false;
        return;
      } else {
        if (errno == EAGAIN || errno == EWOULDBLOCK) return;
        close(fd);
        open_flag = false;
        return;
      }
    }
  };

  bool grace_set = false;
  while (true) {
    if (!child_done) {
      pid_t w = waitpid(pid, &status, WNOHANG);
      if (w == pid) child_done = true;
    }
    if (child_done && !grace_set) {
      // The child is gone; only drain buffered output, do not wait for a
      // lingering grandchild to close the pipes.
      grace_set = true;
      auto grace = std::chrono::steady_clock::now() + std::chrono::milliseconds(200);
      if (grace < deadline) deadline = grace;
    }

    struct pollfd fds[3];
    nfds_t nfds = 0;
    if (out_open) fds[nfds++] = {out_pipe[0], POLLIN, 0};
    if (err_open) fds[nfds++] = {err_pipe[0], POLLIN, 0};
    if (in_open) fds[nfds++] = {in_pipe[1], POLLOUT, 0};

    if (child_done && !out_open && !err_open) break;

    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      if (!child_done) {
        res.timed_out = true;
        kill(-pid, SIGKILL);
        waitpid(pid, &status, 0);
        child_done = true;
        if (out_open) drain(out_pipe[0], res.out, out_open);
        if (err_open) drain(err_pipe[0], res.err, err_open);
      }
      break;  // a grandchild may still hold the pipes; do not wait for EOF
    }

    int wait_ms = 20;
    if (!child_done) {
      auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
      wait_ms = static_cast<int>(std::min<long long>(std::max<long long>(left, 1), 50));
    }
    if (nfds == 0) {
      if (child_done) break;
      usleep(1000);
      continue;
    }
    poll(fds, nfds, wait_ms);

    if (out_open) drain(out_pipe[0], res.out, out_open);
    if (err_open) drain(err_pipe[0], res.err, err_open);
    if (in_open) {
      ssize_t n = write(in_pipe[1], stdin_data.data() + in_off, stdin_data.size() - in_off);
      if (n > 0) in_off += static_cast<size_t>(n);
      if ((n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) || in_off == stdin_data.size()) {
        close(in_pipe[1]);
        in_open = false;
      }
    }
  }
  if (in_open) close(in_pipe[1]);

  // Sweep up any stray grandchildren sharing the group.
  kill(-pid, SIGKILL);

  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (WIFSIGNALED(status)) {
    res.signaled = true;
    res.term_signal = WTERMSIG(status);
  } else if (WIFEXITED(status)) {
    res.exit_code = WEXITSTATUS(status);
    if (res.exit_code == 127) throw ProcessError("cannot execute '" + argv[0] + "'");
  }
  return res;
}

/// RAII temporary directory under the system temp root.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "chcfuzz") {
    auto base = std::filesystem::temp_directory_path();
    std::string tmpl = (base / (prefix + ".XXXXXX")).string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw ProcessError("mkdtemp failed");
    path_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

  std::filesystem::path write_file(const std::string& name, const std::string& data) const {
    auto p = path_ / name;
    std::ofstream os(p, std::ios::binary);
    os << data;
    return p;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace chcfuzz
