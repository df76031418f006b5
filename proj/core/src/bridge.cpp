#include "l2c/bridge.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <future>
#include <mutex>
#include <thread>

#include "l2c/error.hpp"

extern char** environ;

namespace l2c {
namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::ordered_json;

constexpr std::size_t kDiagnosticsLimit = 16 * 1024;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Fd& operator=(Fd&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

std::pair<Fd, Fd> make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) fail(ErrorKind::Bridge, std::string("pipe: ") + std::strerror(errno));
  return {Fd(fds[0]), Fd(fds[1])};
}

/// Host process with its three standard streams attached to pipes.
class HostProcess {
 public:
  explicit HostProcess(const std::vector<std::string>& argv) {
    if (argv.empty()) fail(ErrorKind::Config, "empty bridge host command");
    auto [in_r, in_w] = make_pipe();
    auto [out_r, out_w] = make_pipe();
    auto [err_r, err_w] = make_pipe();

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_r.get(), STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_w.get(), STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, err_w.get(), STDERR_FILENO);

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    const int rc = ::posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) {
      fail(ErrorKind::Bridge, "cannot launch host '" + argv[0] + "': " + std::strerror(rc));
    }
    stdin_ = std::move(in_w);
    stdout_ = std::move(out_r);
    stderr_ = std::move(err_r);
  }

  HostProcess(const HostProcess&) = delete;
  HostProcess& operator=(const HostProcess&) = delete;

  ~HostProcess() {
    if (pid_ > 0 && !exited_) {
      ::kill(pid_, SIGKILL);
      reap(true);
    }
  }

  Fd& in() { return stdin_; }
  int out() const { return stdout_.get(); }
  int err() const { return stderr_.get(); }

  void kill() {
    if (pid_ > 0 && !exited_) ::kill(pid_, SIGKILL);
  }

  /// Waits for exit until the deadline; nullopt on timeout.
  std::optional<int> wait_until(Clock::time_point deadline) {
    while (!exited_) {
      if (reap(false)) break;
      if (Clock::now() >= deadline) return std::nullopt;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    return status_;
  }

 private:
  bool reap(bool block) {
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, block ? 0 : WNOHANG);
    if (r == pid_) {
      exited_ = true;
      status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
      return true;
    }
    return false;
  }

  pid_t pid_ = -1;
  bool exited_ = false;
  int status_ = 0;
  Fd stdin_, stdout_, stderr_;
};

/// Collects the tail of the host's stderr on a background thread.
class Diagnostics {
 public:
  explicit Diagnostics(int fd) : thread_([this, fd] { drain(fd); }) {}
  ~Diagnostics() {
    if (thread_.joinable()) thread_.join();
  }

  std::string text() {
    if (thread_.joinable()) thread_.join();
    return buffer_;
  }

 private:
  void drain(int fd) {
    char chunk[4096];
    while (true) {
      const ssize_t n = ::read(fd, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buffer_.append(chunk, static_cast<std::size_t>(n));
      if (buffer_.size() > kDiagnosticsLimit) buffer_.erase(0, buffer_.size() - kDiagnosticsLimit);
    }
  }

  std::string buffer_;
  std::thread thread_;
};

class LineReader {
 public:
  LineReader(int fd, Clock::time_point deadline) : fd_(fd), deadline_(deadline) {}

  enum class Status { Line, Eof, Timeout };

  Status next(std::string& line) {
    while (true) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        line.assign(buffer_, 0, pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        buffer_.erase(0, pos + 1);
        ++line_number_;
        return Status::Line;
      }
      if (eof_) {
        if (buffer_.empty()) return Status::Eof;
        line = std::exchange(buffer_, {});
        ++line_number_;
        return Status::Line;
      }
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline_ - Clock::now());
      if (remaining.count() <= 0) return Status::Timeout;
      pollfd p{fd_, POLLIN, 0};
      const int rc = ::poll(&p, 1, static_cast<int>(std::min<long long>(remaining.count(), 1000)));
      if (rc < 0 && errno != EINTR) fail(ErrorKind::Bridge, std::string("poll: ") + std::strerror(errno));
      if (rc <= 0) continue;
      char chunk[65536];
      const ssize_t n = ::read(fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        fail(ErrorKind::Bridge, std::string("read: ") + std::strerror(errno));
      }
      if (n == 0) {
        eof_ = true;
      } else {
        buffer_.append(chunk, static_cast<std::size_t>(n));
      }
    }
  }

  std::size_t line_number() const noexcept { return line_number_; }

 private:
  int fd_;
  Clock::time_point deadline_;
  std::string buffer_;
  bool eof_ = false;
  std::size_t line_number_ = 0;
};

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string with_diagnostics(std::string message, const std::string& diagnostics) {
  if (!diagnostics.empty()) message += "\nhost stderr:\n" + diagnostics;
  return message;
}

}  // namespace

std::string hello_line(Task task, std::span<const Column> columns, const HyperParams& hparams) {
  json features = json::array();
  for (const auto& c : columns) features.push_back(c.name);
  json hello;
  hello["v"] = kBridgeProtocolVersion;
  hello["task"] = task_wire_name(task);
  hello["features"] = std::move(features);
  hello["hparams"] = hparams.is_null() ? json::object() : hparams;
  return hello.dump();
}

std::string row_line(std::size_t id, std::span<const std::optional<double>> x, std::optional<double> y) {
  json values = json::array();
  for (const auto& v : x) values.push_back(number_or_null(v));
  json row;
  row["id"] = id;
  row["x"] = std::move(values);
  row["y"] = number_or_null(y);
  return row.dump();
}

std::string end_line(std::string_view which) {
  json marker;
  marker["end"] = which;
  return marker.dump();
}

std::vector<std::string> split_command(std::string_view line) {
  std::vector<std::string> argv;
  std::string word;
  bool in_word = false;
  char quote = 0;
  for (char c : line) {
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else {
        word.push_back(c);
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_word) argv.push_back(std::exchange(word, {}));
      in_word = false;
    } else {
      word.push_back(c);
      in_word = true;
    }
  }
  if (quote) fail(ErrorKind::Config, "unterminated quote in host command");
  if (in_word) argv.push_back(std::move(word));
  return argv;
}

std::vector<PredictionRecord> bridge_session(const BridgeOptions& options, Task task,
                                             const HyperParams& hparams, const FeatureTable& train,
                                             const FeatureTable& test) {
  require(train.same_schema(test), "train and test tables do not share a schema");
  require(train.task == task, "bridge task does not match the tables");

  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(options.timeout_seconds));
  HostProcess host(options.command);
  Diagnostics diagnostics(host.err());

  // All writes happen on this thread with SIGPIPE blocked, so a dying host
  // surfaces as EPIPE instead of killing the client.
  std::promise<bool> go;
  auto go_future = go.get_future();
  std::thread writer([&host, &train, &test, &hparams, task, start = std::move(go_future)]() mutable {
    sigset_t block;
    sigemptyset(&block);
    sigaddset(&block, SIGPIPE);
    pthread_sigmask(SIG_BLOCK, &block, nullptr);
    const int fd = host.in().get();
    bool ok = write_all(fd, hello_line(task, train.columns, hparams) + '\n');
    if (ok && start.get()) {
      std::string chunk;
      auto flush = [&](bool force) {
        if (ok && (force || chunk.size() > (1 << 16))) {
          ok = write_all(fd, chunk);
          chunk.clear();
        }
      };
      for (std::size_t i = 0; i < train.rows.size() && ok; ++i) {
        chunk += row_line(i, train.rows[i].x, train.rows[i].y) + '\n';
        flush(false);
      }
      chunk += end_line("train") + '\n';
      for (std::size_t i = 0; i < test.rows.size() && ok; ++i) {
        chunk += row_line(i, test.rows[i].x, std::nullopt) + '\n';
        flush(false);
      }
      chunk += end_line("test") + '\n';
      flush(true);
    }
    host.in().reset();
  });
  bool released = false;
  auto release = [&](bool proceed) {
    if (!released) {
      go.set_value(proceed);
      released = true;
    }
  };
  struct Joiner {
    std::thread& t;
    std::function<void()> before;
    ~Joiner() {
      before();
      if (t.joinable()) t.join();
    }
  } joiner{writer, [&] {
             release(false);
             host.kill();
           }};

  LineReader reader(host.out(), deadline);
  std::string line;

  auto abort_with = [&](ErrorKind kind, const std::string& message) {
    release(false);
    host.kill();
    if (writer.joinable()) writer.join();
    host.wait_until(Clock::now() + std::chrono::seconds(5));
    return Error(kind, with_diagnostics(message, diagnostics.text()));
  };
  auto next_line = [&](const std::string& expecting) -> std::optional<json> {
    switch (reader.next(line)) {
      case LineReader::Status::Timeout:
        throw abort_with(ErrorKind::Timeout, "host did not answer within " +
                                           std::to_string(options.timeout_seconds) + " s (" + expecting + ")");
      case LineReader::Status::Eof: return std::nullopt;
      case LineReader::Status::Line: break;
    }
    try {
      auto value = json::parse(line);
      if (!value.is_object()) throw std::invalid_argument("not an object");
      return value;
    } catch (const std::exception&) {
      throw abort_with(ErrorKind::Protocol, "malformed host reply at line " + std::to_string(reader.line_number()) +
                                          ": " + line.substr(0, 200));
    }
  };
  auto host_ended = [&](const std::string& what) {
    release(false);
    auto status = host.wait_until(deadline);
    if (!status) return abort_with(ErrorKind::Timeout, "host did not exit after closing its output");
    if (writer.joinable()) writer.join();
    if (*status != 0) {
      return Error(ErrorKind::Bridge, with_diagnostics("host exited with status " + std::to_string(*status) +
                                                           " " + what, diagnostics.text()));
    }
    return Error(ErrorKind::Protocol, with_diagnostics("host closed its output " + what, diagnostics.text()));
  };
  auto check_error_record = [&](const json& msg) {
    if (msg.contains("error")) {
      const auto& e = msg["error"];
      throw abort_with(ErrorKind::Bridge, "host reported an error at line " + std::to_string(reader.line_number()) +
                                        ": " + (e.is_string() ? e.get<std::string>() : e.dump()));
    }
  };

  // handshake
  auto ready = next_line("ready");
  if (!ready) throw host_ended("before the handshake");
  check_error_record(*ready);
  if (!ready->contains("ok") || !(*ready)["ok"].is_boolean()) {
    throw abort_with(ErrorKind::Protocol, "expected ready record at line " + std::to_string(reader.line_number()) +
                                        ", got: " + line.substr(0, 200));
  }
  if (!(*ready)["ok"].get<bool>()) {
    const auto msg = ready->value("msg", std::string("no message"));
    throw abort_with(ErrorKind::Bridge, "host refused the session: " + msg);
  }
  release(true);

  std::vector<PredictionRecord> out;
  out.reserve(test.rows.size());
  const bool classify = is_classification(task);
  while (true) {
    auto msg = next_line("predictions");
    if (!msg) {
      throw host_ended("after " + std::to_string(out.size()) + " of " + std::to_string(test.rows.size()) +
                 " predictions");
    }
    check_error_record(*msg);
    const auto at = " at line " + std::to_string(reader.line_number());
    if (msg->contains("done")) {
      if (out.size() != test.rows.size()) {
        throw abort_with(ErrorKind::Protocol, "host sent done" + at + " after " + std::to_string(out.size()) +
                                            " of " + std::to_string(test.rows.size()) + " predictions");
      }
      break;
    }
    if (!msg->contains("id") || !(*msg)["id"].is_number_integer()) {
      throw abort_with(ErrorKind::Protocol, "prediction without integer id" + at);
    }
    const auto id = (*msg)["id"].get<long long>();
    if (out.size() >= test.rows.size()) {
      throw abort_with(ErrorKind::Protocol, "more predictions than test rows" + at);
    }
    if (id != static_cast<long long>(out.size())) {
      throw abort_with(ErrorKind::Protocol, "prediction id " + std::to_string(id) + at + " out of order; expected " +
                                          std::to_string(out.size()));
    }
    const auto& row = test.rows[out.size()];
    if (classify) {
      const auto p = msg->find("p");
      if (p == msg->end() || !p->is_array() || p->size() != kDiagnosisCount) {
        throw abort_with(ErrorKind::Protocol, "DX prediction needs three probabilities" + at);
      }
      ClassProbabilities probs{};
      for (std::size_t k = 0; k < probs.size(); ++k) {
        if (!(*p)[k].is_number()) throw abort_with(ErrorKind::Protocol, "non-numeric probability" + at);
        probs[k] = (*p)[k].get<double>();
      }
      if (!is_normalized(probs)) throw abort_with(ErrorKind::Protocol, "probabilities not normalized" + at);
      out.push_back({row.patient_id, row.target_month, probs});
    } else {
      const auto y = msg->find("yhat");
      if (y == msg->end() || !y->is_number() || !std::isfinite(y->get<double>())) {
        throw abort_with(ErrorKind::Protocol, "prediction needs a finite yhat" + at);
      }
      out.push_back({row.patient_id, row.target_month, y->get<double>()});
    }
  }

  if (writer.joinable()) writer.join();
  auto status = host.wait_until(deadline);
  if (!status) throw abort_with(ErrorKind::Timeout, "host did not exit after done");
  if (*status != 0) {
    fail(ErrorKind::Bridge,
         with_diagnostics("host exited with status " + std::to_string(*status), diagnostics.text()));
  }
  return out;
}

}  // namespace l2c
