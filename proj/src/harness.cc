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

#include "convrepair/harness.h"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <ostream>

using nlohmann::json;
namespace fs = std::filesystem;

namespace convrepair {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

TestFailureInfo reproduce_original_failure(const BugInstance& bug, PatchValidator& validator) {
  Patch identity{split_context(bug).buggy_code, bug.scenario, PatchOrigin::kConversationalRepair, 0};
  const ValidationResult result = validator.validate(identity);
  if (const auto* failure = std::get_if<TestFailure>(&result.verdict)) return failure->info;
  std::string why = "the original version ";
  if (result.is_pass()) {
    why += "passes all tests";
  } else if (const auto* compile = std::get_if<CompileError>(&result.verdict)) {
    why += "does not build: " + truncate_lines(compile->message, 5);
  } else {
    why += "timed out";
  }
  throw InfrastructureError("bug '" + bug.id + "' does not reproduce: " + why);
}

BugRun repair_bug(const BugInstance& bug, ChatBackend& backend, const EngineConfig& config,
                  const SessionOptions& options, const std::string& session_id) {
  BugRun run;
  run.started_at = utc_timestamp();
  const auto start = std::chrono::steady_clock::now();
  run.outcome.bug_id = bug.id;
  try {
    Workspace workspace = Workspace::create(bug, options.workspace_root);
    if (options.keep_workspaces) {
      workspace.keep();
      run.kept_workspace = workspace.path();
    }
    WorkspaceValidator validator(
        bug, workspace.path(), config.prompt_variant.level == PromptLevel::kNameErrTestBody);
    run.original_failure = reproduce_original_failure(bug, validator);
    run.outcome = conversational_repair(bug, *run.original_failure, backend, validator, config,
                                        session_id);
  } catch (const std::exception& e) {
    run.outcome.error = e.what();
  }
  run.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  run.finished_at = utc_timestamp();
  return run;
}

json config_to_json(const EngineConfig& config) {
  return {
      {"id", config.id},
      {"max_tries", config.max_tries ? json(*config.max_tries) : json(nullptr)},
      {"max_conv_length", config.max_conv_length},
      {"prompt_variant", to_string(config.prompt_variant.level)},
      {"shots", config.prompt_variant.shots},
      {"system_msg", to_string(config.prompt_variant.system_msg)},
      {"feedback_variant", to_string(config.feedback_variant.level)},
      {"end_to_end_timeout_s", config.end_to_end_timeout_s},
      {"cost_rate_per_1k", config.cost_rate_per_1k},
  };
}

json make_record(const BugRun& run, const EngineConfig& config) {
  const RepairOutcome& o = run.outcome;
  json plausible = json::array();
  for (const auto& p : o.plausible) plausible.push_back(p.text);
  json events = json::array();
  for (const auto& e : o.events) {
    events.push_back({{"try", e.try_index},
                      {"conv", e.conversation_id},
                      {"phase", to_string(e.phase)},
                      {"patch", e.patch},
                      {"verdict", e.verdict},
                      {"feedback", e.feedback},
                      {"prompt_tokens", e.usage.prompt_tokens},
                      {"completion_tokens", e.usage.completion_tokens}});
  }
  json record = {{"bug_id", o.bug_id},
                 {"config", config_to_json(config)},
                 {"plausible", plausible},
                 {"tries", o.ledger.tries_used},
                 {"prompt_tokens", o.ledger.total_prompt_tokens},
                 {"completion_tokens", o.ledger.total_completion_tokens},
                 {"dollars", o.ledger.dollars},
                 {"wall_s", run.wall_s},
                 {"events", events},
                 {"started_at", run.started_at},
                 {"finished_at", run.finished_at},
                 {"cut_off", o.cut_off}};
  if (o.error) record["error"] = *o.error;
  if (!o.warnings.empty()) record["warnings"] = o.warnings;
  if (run.original_failure) {
    record["original_failure"] = {{"test_name", run.original_failure->test_name},
                                  {"error_message", run.original_failure->error_message},
                                  {"failing_line", run.original_failure->failing_line},
                                  {"failing_location", run.original_failure->failing_location}};
  }
  if (run.kept_workspace) record["workspace"] = run.kept_workspace->string();
  return record;
}

JsonlWriter::JsonlWriter(const fs::path& path) : out_(path, std::ios::app) {
  if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
}

void JsonlWriter::append(const json& record) {
  std::lock_guard lock(mu_);
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write to results file failed");
}

ReportSummary summarize_results(const std::vector<fs::path>& files) {
  ReportSummary summary;
  double tries = 0;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) {
      summary.warnings.push_back(file.string() + ": cannot open");
      continue;
    }
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = file.string() + ":" + std::to_string(line_no);
      json record;
      try {
        record = json::parse(line);
        BugSummary bug;
        bug.bug_id = record.at("bug_id").get<std::string>();
        bug.tries = record.at("tries").get<int>();
        bug.dollars = record.at("dollars").get<double>();
        const auto& plausible = record.at("plausible");
        bug.plausible = static_cast<int>(plausible.size());
        for (const auto& p : plausible) summary.patches.emplace_back(bug.bug_id, p.get<std::string>());
        summary.total_dollars += bug.dollars;
        tries += bug.tries;
        if (bug.plausible > 0) ++summary.bugs_with_plausible;
        summary.bugs.push_back(std::move(bug));
      } catch (const std::exception& e) {
        summary.warnings.push_back(where + ": skipped corrupt record (" + e.what() + ")");
      }
    }
  }
  if (!summary.bugs.empty()) summary.mean_tries = tries / static_cast<double>(summary.bugs.size());
  return summary;
}

void print_report(std::ostream& out, const ReportSummary& summary, bool with_patches) {
  out << std::left << std::setw(24) << "bug" << std::right << std::setw(10) << "plausible"
      << std::setw(8) << "tries" << std::setw(12) << "dollars" << "\n";
  for (const auto& b : summary.bugs) {
    out << std::left << std::setw(24) << b.bug_id << std::right << std::setw(10) << b.plausible
        << std::setw(8) << b.tries << std::setw(12) << std::fixed << std::setprecision(6)
        << b.dollars << "\n";
  }
  out << std::fixed << std::setprecision(6);
  out << "records: " << summary.bugs.size() << "\n";
  out << "bugs with plausible patches: " << summary.bugs_with_plausible << "\n";
  out << "total dollars: " << summary.total_dollars << "\n";
  out << std::setprecision(2) << "mean tries: " << summary.mean_tries << "\n";
  out.unsetf(std::ios::floatfield);
  if (with_patches) {
    for (const auto& [bug, text] : summary.patches) {
      out << "=== " << bug << "\n" << text << "\n";
    }
  }
}

}  // namespace convrepair
