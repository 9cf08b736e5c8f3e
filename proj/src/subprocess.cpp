// Copyright 2026 The Purifuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "purifuse/subprocess.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <thread>
#include <vector>

#include "purifuse/error.hpp"

extern char** environ;

namespace purifuse {

namespace {

class Limiter {
 public:
  void set_limit(int limit) {
    std::lock_guard lock(mu_);
    limit_ = std::max(1, limit);
    cv_.notify_all();
  }
  int limit() {
    std::lock_guard lock(mu_);
    return limit_;
  }
  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return running_ < limit_; });
    ++running_;
  }
  void release() {
    std::lock_guard lock(mu_);
    --running_;
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int limit_ = 4;
  int running_ = 0;
};

Limiter& limiter() {
  static Limiter l;
  return l;
}

struct SlotGuard {
  SlotGuard() { limiter().acquire(); }
  ~SlotGuard() { limiter().release(); }
};

}  // namespace

void set_max_subprocesses(int limit) { limiter().set_limit(limit); }
int max_subprocesses() { return limiter().limit(); }

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

std::string substitute_placeholders(
    const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i);
      if (close != std::string::npos) {
        const auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += shell_quote(it->second);
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

int run_shell_command(const std::string& command,
                      std::chrono::milliseconds timeout) {
  SlotGuard slot;
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  std::string sh = "/bin/sh";
  std::string dash_c = "-c";
  std::string cmd = command;
  std::vector<char*> argv = {sh.data(), dash_c.data(), cmd.data(), nullptr};
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", nullptr, &attr, argv.data(),
                             environ);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) {
    throw ExternalCommandError("cannot start command: " +
                               std::string(std::strerror(rc)));
  }

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto poll = std::chrono::milliseconds(1);
  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) {
      throw ExternalCommandError("waitpid failed: " +
                                 std::string(std::strerror(errno)));
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw ExternalCommandError(
          "command timed out after " + std::to_string(timeout.count()) +
          " ms: " + command);
    }
    std::this_thread::sleep_for(poll);
    poll = std::min(poll * 2, std::chrono::milliseconds(20));
  }
  if (WIFSIGNALED(status)) {
    throw ExternalCommandError("command killed by signal " +
                               std::to_string(WTERMSIG(status)) + ": " +
                               command);
  }
  return WEXITSTATUS(status);
}

TempDir::TempDir() {
  std::string tmpl =
      (std::filesystem::temp_directory_path() / "purifuse-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) {
    throw DataError("cannot create temporary directory");
  }
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace purifuse
