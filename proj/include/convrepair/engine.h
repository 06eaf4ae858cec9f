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

#ifndef CONVREPAIR_ENGINE_H_
#define CONVREPAIR_ENGINE_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convrepair/bug_model.h"
#include "convrepair/failure.h"
#include "convrepair/llm_client.h"
#include "convrepair/prompting.h"

namespace convrepair {

inline constexpr double kDefaultCostPer1kTokens = 0.002;
inline constexpr double kDefaultEndToEndTimeoutS = 5 * 60 * 60;

/// 200 tries for single-line and single-hunk bugs, 100 for single-function.
int default_max_tries(RepairScenario scenario);

struct EngineConfig {
  std::string id = "default";
  /// Unset means default_max_tries() for the bug's scenario.
  std::optional<int> max_tries;
  int max_conv_length = 3;
  PromptVariant prompt_variant;
  FeedbackVariant feedback_variant;
  double end_to_end_timeout_s = kDefaultEndToEndTimeoutS;
  double cost_rate_per_1k = kDefaultCostPer1kTokens;

  int resolved_max_tries(RepairScenario scenario) const {
    return max_tries ? *max_tries : default_max_tries(scenario);
  }
};

/// Throws std::invalid_argument when a bound is violated.
void check_config(const EngineConfig& config);

struct CostLedger {
  std::int64_t total_prompt_tokens = 0;
  std::int64_t total_completion_tokens = 0;
  int tries_used = 0;
  double dollars = 0;

  /// Adds usage and reprices from the running totals.
  void charge(const TokenUsage& usage, double rate_per_1k);
};

/// (prompt + completion tokens) / 1000 * rate.
double compute_cost(const CostLedger& ledger, double rate_per_1k);

enum class EventPhase { kConversation, kAlternative };
std::string_view to_string(EventPhase phase);

struct RepairEvent {
  int try_index = 0;  // 0 for events that consumed no try
  int conversation_id = 0;
  EventPhase phase = EventPhase::kConversation;
  std::string patch;
  /// pass, compile_error, test_failure, timeout, unparseable, duplicate, error
  std::string verdict;
  std::string feedback;
  TokenUsage usage;

  bool operator==(const RepairEvent&) const = default;
};

struct RepairOutcome {
  std::string bug_id;
  std::vector<Patch> plausible;
  CostLedger ledger;
  std::vector<RepairEvent> events;
  std::vector<std::string> warnings;
  std::optional<std::string> error;
  bool cut_off = false;  // end-to-end timeout hit
};

/// Collapses whitespace runs outside string/char literals and trims.
std::string normalize_patch(std::string_view text);

/// Conversational repair followed by alternative plausible-patch generation.
///
/// Phase 1 opens conversations from the initial prompt. Each failing patch
/// and its feedback are appended as one exchange; after max_conv_length
/// exchanges the history is dropped and a fresh conversation starts. The first
/// passing patch ends phase 1. Phase 2 spends the remaining tries asking for
/// alternatives to the plausible patches found so far; passing patches that
/// are new after normalize_patch are kept.
///
/// Every backend reply consumes one try. Transport failures consume none and
/// end the run with an error event. Validator infrastructure failures end it
/// the same way.
RepairOutcome conversational_repair(const BugInstance& bug, const TestFailureInfo& original,
                                    ChatBackend& backend, PatchValidator& validator,
                                    const EngineConfig& config,
                                    const std::string& session_id = {});

struct AblationRow {
  EngineConfig config;
  int bugs_total = 0;
  int bugs_plausible = 0;
  double mean_tries = 0;
  double mean_dollars = 0;
  std::vector<std::string> annotations;
};

/// Repairs one bug under one configuration.
using BugRepairFn = std::function<RepairOutcome(const BugInstance&, const EngineConfig&)>;

/// One row per configuration. Per-bug infrastructure failures become row
/// annotations; such bugs still count in the means.
std::vector<AblationRow> run_ablation(std::span<const BugInstance> corpus,
                                      const BugRepairFn& repair,
                                      std::span<const EngineConfig> grid);

/// Header: config_id,prompt_variant,feedback_variant,max_conv_length,shots,
/// bugs_plausible,mean_tries,mean_dollars
void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);

}  // namespace convrepair

#endif  // CONVREPAIR_ENGINE_H_
