#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <system_error>

#include "exforge/judge.hpp"

namespace exforge::judge {

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

std::string render_command(const std::string& tmpl, const std::string& path) {
  std::string out = tmpl;
  const std::string key = "{source}";
  for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + path.size()))
    out.replace(pos, key.size(), path);
  return out;
}

class ExternalProgram final : public PreparedProgram {
 public:
  ExternalProgram(std::string path, ExternalConfig cfg) : path_(std::move(path)), cfg_(std::move(cfg)) {}
  ~ExternalProgram() override { ::unlink(path_.c_str()); }

  toy::RunResult run(std::string_view input, const toy::Limits&) const override {
    toy::RunResult r;
    int in_pipe[2], out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw std::system_error(errno, std::generic_category(), "pipe");
    Fd in_r(in_pipe[0]), in_w(in_pipe[1]);
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw std::system_error(errno, std::generic_category(), "pipe");
    Fd out_r(out_pipe[0]), out_w(out_pipe[1]);

    const std::string cmd = render_command(cfg_.command_template, path_);
    const auto start = std::chrono::steady_clock::now();
    pid_t pid = ::fork();
    if (pid < 0) throw std::system_error(errno, std::generic_category(), "fork");
    if (pid == 0) {
      ::setpgid(0, 0);
      ::dup2(in_r.get(), STDIN_FILENO);
      ::dup2(out_w.get(), STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    in_r.reset();
    out_w.reset();
    ::fcntl(in_w.get(), F_SETFL, O_NONBLOCK);

    std::size_t written = 0;
    if (input.empty()) in_w.reset();
    bool timed_out = false;
    char buf[65536];
    for (;;) {
      auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start).count();
      if (elapsed >= cfg_.timeout_ms) {
        timed_out = true;
        break;
      }
      pollfd fds[2] = {{out_r.get(), POLLIN, 0}, {in_w.get(), POLLOUT, 0}};
      nfds_t nfds = in_w.get() >= 0 ? 2 : 1;
      int rc = ::poll(fds, nfds, static_cast<int>(cfg_.timeout_ms - elapsed));
      if (rc < 0 && errno == EINTR) continue;
      if (rc < 0) break;
      if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        ssize_t n = ::write(in_w.get(), input.data() + written, input.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if (n < 0 && errno != EAGAIN) written = input.size();
        if (written >= input.size()) in_w.reset();
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        ssize_t n = ::read(out_r.get(), buf, sizeof buf);
        if (n <= 0) break;
        if (r.output.size() < cfg_.max_output_bytes) r.output.append(buf, static_cast<std::size_t>(n));
      }
    }
    if (timed_out) ::kill(-pid, SIGKILL);

    int status = 0;
    rusage usage{};
    while (::wait4(pid, &status, 0, &usage) < 0 && errno == EINTR) {
    }
    if (!timed_out) ::kill(-pid, SIGKILL);  // stray children of the shell
    const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start).count();
    r.metrics.steps = wall;
    r.metrics.peak_cells = static_cast<std::int64_t>(usage.ru_maxrss) * 1024;

    if (timed_out) {
      r.status = toy::RunStatus::StepLimit;
    } else if (WIFSIGNALED(status) || (WIFEXITED(status) && WEXITSTATUS(status) != 0)) {
      r.status = toy::RunStatus::RuntimeError;
      r.error = toy::Diagnostic{0, 0,
                                WIFSIGNALED(status)
                                    ? "killed by signal " + std::to_string(WTERMSIG(status))
                                    : "exit status " + std::to_string(WEXITSTATUS(status))};
    }
    return r;
  }

 private:
  std::string path_;
  ExternalConfig cfg_;
};

}  // namespace

Preparation ExternalRunner::prepare(const std::string& source) const {
  ignore_sigpipe();
  std::string path = "/tmp/exforge-XXXXXX" + cfg_.source_suffix;
  std::vector<char> buf(path.begin(), path.end());
  buf.push_back('\0');
  int fd = ::mkstemps(buf.data(), static_cast<int>(cfg_.source_suffix.size()));
  if (fd < 0) throw std::system_error(errno, std::generic_category(), "mkstemps");
  Fd file(fd);
  path.assign(buf.data());
  std::size_t off = 0;
  while (off < source.size()) {
    ssize_t n = ::write(file.get(), source.data() + off, source.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n < 0) {
      ::unlink(path.c_str());
      throw std::system_error(errno, std::generic_category(), "write");
    }
    off += static_cast<std::size_t>(n);
  }
  return {std::make_unique<ExternalProgram>(std::move(path), cfg_), std::nullopt};
}

}  // namespace exforge::judge
