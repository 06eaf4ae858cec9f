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

#ifndef CONVREPAIR_CLI_H_
#define CONVREPAIR_CLI_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "convrepair/engine.h"
#include "convrepair/harness.h"
#include "convrepair/llm_client.h"

namespace convrepair::cli {

/// Options shared by every subcommand.
struct CommonArgs {
  std::filesystem::path corpus;
  std::vector<std::string> bugs;
  std::string scenario;  // "", sl, sh or sf
  BackendConfig backend;
  EngineConfig engine;
  std::filesystem::path out;
  int jobs = 1;
  SessionOptions session;
};

struct AblateArgs {
  std::filesystem::path grid;
  std::filesystem::path csv;
};

struct ReportArgs {
  std::vector<std::filesystem::path> files;
  bool patches = false;
  bool strict = false;
};

int cmd_repair(const CommonArgs& args, std::ostream& out, std::ostream& err);
int cmd_ablate(const CommonArgs& args, const AblateArgs& ablate, std::ostream& out,
               std::ostream& err);
int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err);

/// Parses a grid file: {"configs": [{"id": ..., overrides...}]} or a bare
/// array of such objects. Each entry starts from `base`.
std::vector<EngineConfig> load_grid(const std::filesystem::path& path, const EngineConfig& base);

/// Full command line, argv[0] included.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace convrepair::cli

#endif  // CONVREPAIR_CLI_H_
