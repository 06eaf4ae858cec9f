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

#include "convrepair/cli.h"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace convrepair::cli {
namespace {

std::vector<BugInstance> select_bugs(const CommonArgs& args) {
  std::vector<BugInstance> corpus = load_corpus(args.corpus);
  std::vector<BugInstance> selected;
  if (!args.bugs.empty()) {
    for (const auto& id : args.bugs) {
      auto it = std::find_if(corpus.begin(), corpus.end(),
                             [&](const BugInstance& b) { return b.id == id; });
      if (it == corpus.end()) throw std::invalid_argument("unknown bug id '" + id + "'");
      selected.push_back(*it);
    }
  } else {
    selected = std::move(corpus);
  }
  if (!args.scenario.empty()) {
    const RepairScenario wanted = parse_scenario(args.scenario);
    std::erase_if(selected, [&](const BugInstance& b) { return b.scenario != wanted; });
  }
  return selected;
}

void report_warnings(const RepairOutcome& outcome, std::ostream& err) {
  for (const auto& w : outcome.warnings) err << "warning: " << w << "\n";
}

}  // namespace

std::vector<EngineConfig> load_grid(const fs::path& path, const EngineConfig& base) {
  static const std::set<std::string> kKeys = {
      "id",     "max_tries",  "max_conv_length",      "prompt_variant",  "feedback_variant",
      "shots",  "system_msg", "end_to_end_timeout_s", "cost_rate_per_1k"};
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw std::invalid_argument("malformed grid file " + path.string() + ": " + e.what());
  }
  const json* entries = &doc;
  if (doc.is_object() && doc.contains("configs")) entries = &doc["configs"];
  if (!entries->is_array() || entries->empty()) {
    throw std::invalid_argument("malformed grid file " + path.string() +
                                ": expected a non-empty list of configs");
  }

  std::vector<EngineConfig> grid;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < entries->size(); ++i) {
    const json& e = (*entries)[i];
    const std::string where =
        "malformed grid file " + path.string() + ": config #" + std::to_string(i + 1) + ": ";
    try {
      if (!e.is_object()) throw std::invalid_argument("not an object");
      for (const auto& [key, _] : e.items()) {
        if (!kKeys.contains(key)) throw std::invalid_argument("unknown key '" + key + "'");
      }
      EngineConfig c = base;
      c.id = e.at("id").get<std::string>();
      if (e.contains("max_tries")) c.max_tries = e["max_tries"].get<int>();
      if (e.contains("max_conv_length")) c.max_conv_length = e["max_conv_length"].get<int>();
      if (e.contains("prompt_variant")) {
        c.prompt_variant.level = parse_prompt_level(e["prompt_variant"].get<std::string>());
      }
      if (e.contains("feedback_variant")) {
        c.feedback_variant.level = parse_feedback_level(e["feedback_variant"].get<std::string>());
      }
      if (e.contains("shots")) c.prompt_variant.shots = e["shots"].get<int>();
      if (e.contains("system_msg")) {
        c.prompt_variant.system_msg = parse_system_message(e["system_msg"].get<std::string>());
      }
      if (e.contains("end_to_end_timeout_s")) {
        c.end_to_end_timeout_s = e["end_to_end_timeout_s"].get<double>();
      }
      if (e.contains("cost_rate_per_1k")) c.cost_rate_per_1k = e["cost_rate_per_1k"].get<double>();
      check_config(c);
      if (!ids.insert(c.id).second) throw std::invalid_argument("duplicate id '" + c.id + "'");
      grid.push_back(std::move(c));
    } catch (const std::exception& ex) {
      throw std::invalid_argument(where + ex.what());
    }
  }
  return grid;
}

int cmd_repair(const CommonArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<BugInstance> bugs;
  std::unique_ptr<ChatBackend> backend;
  std::unique_ptr<JsonlWriter> writer;
  try {
    check_config(args.engine);
    bugs = select_bugs(args);
    backend = make_backend(args.backend);
    writer = std::make_unique<JsonlWriter>(args.out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < bugs.size(); i = next++) {
      const BugInstance& bug = bugs[i];
      BugRun run = repair_bug(bug, *backend, args.engine, args.session);
      try {
        writer->append(make_record(run, args.engine));
      } catch (const std::exception& e) {
        std::lock_guard lock(log_mu);
        err << "error: " << e.what() << "\n";
        ++failures;
      }
      std::lock_guard lock(log_mu);
      report_warnings(run.outcome, err);
      if (run.outcome.error) {
        ++failures;
        err << "error: " << bug.id << ": " << *run.outcome.error << "\n";
      }
      out << bug.id << ": " << run.outcome.plausible.size() << " plausible, "
          << run.outcome.ledger.tries_used << " tries, $" << std::fixed << std::setprecision(6)
          << run.outcome.ledger.dollars << "\n";
      out.unsetf(std::ios::floatfield);
    }
  };
  const int jobs = std::max(1, std::min<int>(args.jobs, static_cast<int>(bugs.size())));
  {
    std::vector<std::jthread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }
  return failures.load() == 0 ? 0 : 1;
}

int cmd_ablate(const CommonArgs& args, const AblateArgs& ablate, std::ostream& out,
               std::ostream& err) {
  std::vector<BugInstance> bugs;
  std::vector<EngineConfig> grid;
  std::unique_ptr<ChatBackend> backend;
  std::unique_ptr<JsonlWriter> writer;
  try {
    grid = load_grid(ablate.grid, args.engine);
    bugs = select_bugs(args);
    backend = make_backend(args.backend);
    if (!args.out.empty()) writer = std::make_unique<JsonlWriter>(args.out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  const BugRepairFn repair = [&](const BugInstance& bug, const EngineConfig& config) {
    BugRun run = repair_bug(bug, *backend, config, args.session, config.id + "/" + bug.id);
    if (writer) writer->append(make_record(run, config));
    return run.outcome;
  };
  const auto rows = run_ablation(bugs, repair, grid);

  if (!ablate.csv.empty()) {
    std::ofstream csv(ablate.csv);
    if (!csv) {
      err << "error: cannot write " << ablate.csv << "\n";
      return 2;
    }
    write_ablation_csv(csv, rows);
  }

  out << std::left << std::setw(20) << "config" << std::setw(20) << "prompt" << std::setw(20)
      << "feedback" << std::right << std::setw(5) << "len" << std::setw(6) << "shots"
      << std::setw(11) << "plausible" << std::setw(12) << "mean_tries" << std::setw(14)
      << "mean_dollars" << "\n";
  for (const auto& row : rows) {
    out << std::left << std::setw(20) << row.config.id << std::setw(20)
        << to_string(row.config.prompt_variant.level) << std::setw(20)
        << to_string(row.config.feedback_variant.level) << std::right << std::setw(5)
        << row.config.max_conv_length << std::setw(6) << row.config.prompt_variant.shots
        << std::setw(11) << (std::to_string(row.bugs_plausible) + "/" + std::to_string(row.bugs_total))
        << std::setw(12) << std::fixed << std::setprecision(2) << row.mean_tries << std::setw(14)
        << std::setprecision(6) << row.mean_dollars << "\n";
    out.unsetf(std::ios::floatfield);
    for (const auto& note : row.annotations) err << "warning: " << row.config.id << ": " << note << "\n";
  }
  return 0;
}

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  const ReportSummary summary = summarize_results(args.files);
  for (const auto& w : summary.warnings) err << "warning: " << w << "\n";
  print_report(out, summary, args.patches);
  return args.strict && !summary.warnings.empty() ? 1 : 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conversational automated program repair driver", "convrepair"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file (flags take precedence)");

  CommonArgs common;
  std::string backend_kind = "scripted";
  std::string prompt_variant = std::string(to_string(common.engine.prompt_variant.level));
  std::string feedback_variant = std::string(to_string(common.engine.feedback_variant.level));
  std::string system_msg = std::string(to_string(common.engine.prompt_variant.system_msg));
  std::string script;

  app.add_option("--corpus", common.corpus, "Corpus manifest (JSON)");
  app.add_option("--bug", common.bugs, "Bug id to run (repeatable; default all)");
  app.add_option("--scenario", common.scenario, "Only bugs of this scenario")
      ->check(CLI::IsMember({"sl", "sh", "sf"}));
  app.add_option("--backend", backend_kind, "Model backend")
      ->check(CLI::IsMember({"http", "scripted"}))
      ->capture_default_str();
  app.add_option("--script", script, "Script for the scripted backend");
  app.add_option("--seed", common.backend.seed, "Seed for scripted reply pools")
      ->capture_default_str();
  app.add_option("--model", common.backend.model_name, "Model name")->capture_default_str();
  app.add_option("--endpoint", common.backend.endpoint, "Chat-completions URL")
      ->capture_default_str();
  app.add_option("--api-key-env", common.backend.api_key_env,
                 "Environment variable holding the API key (empty: none)")
      ->capture_default_str();
  app.add_option("--temperature", common.backend.temperature)->capture_default_str();
  app.add_option("--top-p", common.backend.top_p)->capture_default_str();
  app.add_option("--max-output-tokens", common.backend.max_output_tokens)->capture_default_str();
  app.add_option("--max-context-tokens", common.backend.max_context_tokens)->capture_default_str();
  app.add_option("--retries", common.backend.retries, "Attempts per query")->capture_default_str();
  app.add_option("--max-tries", common.engine.max_tries,
                 "Query budget per bug (default 200, or 100 for single-function)");
  app.add_option("--max-conv-len", common.engine.max_conv_length, "Exchanges per conversation")
      ->capture_default_str();
  app.add_option("--shots", common.engine.prompt_variant.shots, "Few-shot examples")
      ->capture_default_str();
  app.add_option("--prompt-variant", prompt_variant)
      ->check(CLI::IsMember({"base", "name-err", "name-err-fail-line", "name-err-test-body"}))
      ->capture_default_str();
  app.add_option("--feedback-variant", feedback_variant)
      ->check(CLI::IsMember({"base", "name-err", "name-err-fail-line", "dynamic"}))
      ->capture_default_str();
  app.add_option("--system-msg", system_msg)
      ->check(CLI::IsMember({"apr-tool", "assistant"}))
      ->capture_default_str();
  app.add_option("--rate", common.engine.cost_rate_per_1k, "Dollars per 1000 tokens")
      ->capture_default_str();
  app.add_option("--timeout", common.engine.end_to_end_timeout_s,
                 "End-to-end wall-clock limit per bug (seconds)")
      ->capture_default_str();
  app.add_option("--out", common.out, "JSONL results file (appended)");
  app.add_option("--jobs", common.jobs, "Bugs repaired concurrently")->capture_default_str();
  app.add_option("--workspace-root", common.session.workspace_root)->capture_default_str();
  app.add_flag("--keep-workspaces", common.session.keep_workspaces,
               "Do not delete workspaces after each run");

  auto* repair = app.add_subcommand("repair", "Repair bugs from a corpus");
  auto* ablate_cmd = app.add_subcommand("ablate", "Run a configuration grid over a corpus");
  AblateArgs ablate;
  ablate_cmd->add_option("--grid", ablate.grid, "Grid file (JSON)")->required();
  ablate_cmd->add_option("--csv", ablate.csv, "CSV output path");
  auto* report = app.add_subcommand("report", "Summarize JSONL results");
  ReportArgs report_args;
  report->add_option("files", report_args.files, "Result files")->required();
  report->add_flag("--patches", report_args.patches, "Print every plausible patch");
  report->add_flag("--strict", report_args.strict, "Fail on corrupt lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    common.backend.kind = backend_kind == "http" ? BackendKind::kHttp : BackendKind::kScripted;
    common.backend.script_path = script;
    common.engine.prompt_variant.level = parse_prompt_level(prompt_variant);
    common.engine.feedback_variant.level = parse_feedback_level(feedback_variant);
    common.engine.prompt_variant.system_msg = parse_system_message(system_msg);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  if (*report) return cmd_report(report_args, out, err);
  if (common.corpus.empty()) {
    err << "error: --corpus is required\n";
    return 2;
  }
  if (*repair) {
    if (common.out.empty()) {
      err << "error: --out is required\n";
      return 2;
    }
    return cmd_repair(common, out, err);
  }
  return cmd_ablate(common, ablate, out, err);
}

}  // namespace convrepair::cli
