// Copyright 2026 The ConvRepair Authors
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

#ifndef CONVREPAIR_SUBPROCESS_H_
#define CONVREPAIR_SUBPROCESS_H_

#include <chrono>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace convrepair {

struct CommandResult {
  int exit_code = -1;  // -1 when killed by a signal or timed out
  std::string output;  // stdout and stderr, interleaved
  bool timed_out = false;
  std::chrono::milliseconds elapsed{0};
};

class SpawnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs `command` through /bin/sh -c in `cwd`. On timeout the whole process
/// group is killed.
CommandResult run_command(const std::string& command,
                          const std::filesystem::path& cwd,
                          std::chrono::milliseconds timeout);

}  // namespace convrepair

#endif  // CONVREPAIR_SUBPROCESS_H_
