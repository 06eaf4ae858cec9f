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

#ifndef CONVREPAIR_PROMPTING_H_
#define CONVREPAIR_PROMPTING_H_

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "convrepair/bug_model.h"
#include "convrepair/chat.h"
#include "convrepair/failure.h"

namespace convrepair {

inline constexpr std::string_view kInfillIndicator = ">>> [ INFILL ] <<<";
inline constexpr std::string_view kAprToolSystemMessage =
    "You are an Automated Program Repair tool";
inline constexpr std::string_view kAssistantSystemMessage = "You are a helpful assistant";
inline constexpr std::string_view kStillFailsFeedback =
    "It still does not fix the original test failure.";
inline constexpr std::string_view kIncorrectFeedback = "The fixed version is still not correct.";
inline constexpr std::string_view kUnparseableFeedback =
    "The fixed version is still not correct. The response did not contain any code; "
    "reply with the fix as code only.";

enum class PromptLevel { kBasePrompt, kNameErr, kNameErrFailLine, kNameErrTestBody };
enum class SystemMessageKind { kAssistant, kAprTool };
enum class FeedbackLevel { kBaseFeedback, kNameErr, kNameErrFailLine, kDynamic };

struct PromptVariant {
  PromptLevel level = PromptLevel::kNameErrFailLine;
  int shots = 1;
  SystemMessageKind system_msg = SystemMessageKind::kAprTool;

  bool operator==(const PromptVariant&) const = default;
};

struct FeedbackVariant {
  FeedbackLevel level = FeedbackLevel::kDynamic;

  bool operator==(const FeedbackVariant&) const = default;
};

// CLI / CSV spellings, e.g. "name-err-fail-line", "dynamic", "apr-tool".
std::string_view to_string(PromptLevel level);
std::string_view to_string(FeedbackLevel level);
std::string_view to_string(SystemMessageKind kind);
PromptLevel parse_prompt_level(std::string_view text);
FeedbackLevel parse_feedback_level(std::string_view text);
SystemMessageKind parse_system_message(std::string_view text);

struct RenderedPrompt {
  std::string text;
  Role role = Role::kUser;
  /// Variant downgrades and similar non-fatal notes.
  std::vector<std::string> warnings;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UnparseableResponse : public std::runtime_error {
 public:
  UnparseableResponse() : std::runtime_error("unparseable response") {}
};

RenderedPrompt system_message(const PromptVariant& variant);

/// Few-shot examples, the function with the infill indicator (or the whole
/// function), the buggy-code hint, failure details per level, and the closing
/// instruction. `shots` beyond the bug's examples is clamped with a warning.
RenderedPrompt build_initial_prompt(const BugInstance& bug, const TestFailureInfo& failure,
                                    const PromptVariant& variant);

/// Throws ContractViolation on a Pass result.
RenderedPrompt build_feedback(const ValidationResult& result, const TestFailureInfo& original,
                              const FeedbackVariant& variant);

/// Initial prompt, the numbered plausible patches, then the alternative-fix
/// instruction. Throws ContractViolation when `plausible` is empty.
RenderedPrompt build_alt_instruction(const RenderedPrompt& initial,
                                     std::span<const Patch> plausible);

/// "Please generate an alternative fix line." and its hunk/function variants.
std::string_view alt_instruction_sentence(RepairScenario scenario);

/// Pulls the candidate code out of a model reply: the first fenced block, or
/// else the longest run of code-looking lines. Trailing whitespace is
/// stripped from every line. Throws UnparseableResponse.
Patch extract_patch(std::string_view model_output, RepairScenario scenario);

}  // namespace convrepair

#endif  // CONVREPAIR_PROMPTING_H_
