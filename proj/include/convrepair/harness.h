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

#ifndef CONVREPAIR_HARNESS_H_
#define CONVREPAIR_HARNESS_H_

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "convrepair/bug_model.h"
#include "convrepair/engine.h"
#include "convrepair/llm_client.h"
#include "json.hpp"

namespace convrepair {

struct SessionOptions {
  std::filesystem::path workspace_root = std::filesystem::temp_directory_path() / "convrepair";
  bool keep_workspaces = false;
};

/// Result of driving one bug end to end.
struct BugRun {
  RepairOutcome outcome;
  std::optional<TestFailureInfo> original_failure;
  double wall_s = 0;
  std::string started_at;
  std::string finished_at;
  std::optional<std::filesystem::path> kept_workspace;
};

/// Runs the unpatched bug to obtain the original failure. A passing or
/// non-compiling original is an infrastructure failure.
TestFailureInfo reproduce_original_failure(const BugInstance& bug, PatchValidator& validator);

/// Copies the project into a fresh workspace, reproduces the original failure
/// and runs conversational_repair. Infrastructure failures land in
/// outcome.error rather than escaping.
BugRun repair_bug(const BugInstance& bug, ChatBackend& backend, const EngineConfig& config,
                  const SessionOptions& options, const std::string& session_id = {});

nlohmann::json config_to_json(const EngineConfig& config);

/// One JSONL record: bug_id, config, plausible, tries, prompt_tokens,
/// completion_tokens, dollars, wall_s, events, started_at, finished_at and
/// error when present.
nlohmann::json make_record(const BugRun& run, const EngineConfig& config);

/// Appends one JSON object per line; safe to share between threads.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  void append(const nlohmann::json& record);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

struct BugSummary {
  std::string bug_id;
  int plausible = 0;
  int tries = 0;
  double dollars = 0;
};

struct ReportSummary {
  std::vector<BugSummary> bugs;
  std::vector<std::string> warnings;  // skipped lines
  std::vector<std::pair<std::string, std::string>> patches;  // (bug_id, text)
  double total_dollars = 0;
  double mean_tries = 0;
  int bugs_with_plausible = 0;
};

/// Aggregates JSONL result files. Corrupt lines are skipped with a warning.
ReportSummary summarize_results(const std::vector<std::filesystem::path>& files);

void print_report(std::ostream& out, const ReportSummary& summary, bool with_patches);

/// UTC ISO-8601 timestamp with seconds.
std::string utc_timestamp();

}  // namespace convrepair

#endif  // CONVREPAIR_HARNESS_H_
