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

#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>

namespace purifuse {

/// Process-wide cap on concurrently running external commands.
void set_max_subprocesses(int limit);
int max_subprocesses();

/// Single-quotes `s` for /bin/sh.
std::string shell_quote(const std::string& s);

/// Replaces each "{key}" in `tmpl` with the quoted value.
std::string substitute_placeholders(
    const std::string& tmpl, const std::map<std::string, std::string>& values);

/// Runs `command` under /bin/sh with the inherited environment, honouring
/// the subprocess limit. Returns the exit status; throws
/// ExternalCommandError if the command could not be started, was killed by a
/// signal, or outlived `timeout` (its process group is then killed).
int run_shell_command(const std::string& command,
                      std::chrono::milliseconds timeout);

/// Scoped temporary directory, removed recursively on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace purifuse
