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

#include <stdexcept>
#include <string>

namespace purifuse {

/// Malformed or inconsistent configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: unreadable images, unknown image ids, broken JSON
/// (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An external stage or detector command failed, timed out, or produced
/// unusable output (CLI exit code 3).
class ExternalCommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the purifier pipeline; carries the failing stage position.
class StageError : public std::runtime_error {
 public:
  StageError(std::size_t stage_index, const std::string& cause,
             bool external_failure = false)
      : std::runtime_error("stage " + std::to_string(stage_index) + ": " +
                           cause),
        stage_index_(stage_index),
        cause_(cause),
        external_failure_(external_failure) {}

  std::size_t stage_index() const noexcept { return stage_index_; }
  const std::string& cause() const noexcept { return cause_; }
  bool external_failure() const noexcept { return external_failure_; }

 private:
  std::size_t stage_index_;
  std::string cause_;
  bool external_failure_;
};

}  // namespace purifuse
