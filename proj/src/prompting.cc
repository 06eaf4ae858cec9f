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

#include "convrepair/prompting.h"

#include <algorithm>
#include <array>
#include <sstream>

namespace convrepair {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string_view rtrim(std::string_view s) {
  const auto e = s.find_last_not_of(" \t\r\n");
  return e == std::string_view::npos ? std::string_view{} : s.substr(0, e + 1);
}

std::string strip_trailing_newlines(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

std::string_view unit_noun(RepairScenario scenario) {
  switch (scenario) {
    case RepairScenario::kSingleLine:
      return "line";
    case RepairScenario::kSingleHunk:
      return "hunk";
    case RepairScenario::kSingleFunction:
      return "function";
  }
  return "line";
}

void code_block(std::ostringstream& out, std::string_view code) {
  out << "```\n" << strip_trailing_newlines(code) << "\n```\n";
}

// Failure details shared by the initial prompt and feedback messages.
void failure_section(std::ostringstream& out, const TestFailureInfo& failure, PromptLevel level) {
  if (level == PromptLevel::kBasePrompt) return;
  out << "The code fails on this test: " << failure.test_name << "\n";
  if (level == PromptLevel::kNameErrFailLine && !failure.failing_line.empty()) {
    out << "on this test line:\n";
    code_block(out, failure.failing_line);
  } else if (level == PromptLevel::kNameErrTestBody && failure.test_body) {
    code_block(out, *failure.test_body);
  }
  out << "with the following test error:\n" << strip_trailing_newlines(failure.error_message)
      << "\n";
}

std::string_view leading_ws(std::string_view line) {
  const auto n = line.find_first_not_of(" \t");
  return n == std::string_view::npos ? line : line.substr(0, n);
}

bool has_code_punctuation(std::string_view t) {
  return t.find_first_of(";{}()[]=<>") != std::string_view::npos;
}

bool looks_like_prose(std::string_view t) {
  if (t.empty() || has_code_punctuation(t)) return false;
  const bool capital = t.front() >= 'A' && t.front() <= 'Z';
  const int words = 1 + static_cast<int>(std::count(t.begin(), t.end(), ' '));
  if (capital && words >= 3) return true;
  return (t.back() == ':' || t.back() == '.') && words >= 3;
}

bool looks_like_code(std::string_view line) {
  static constexpr std::array<std::string_view, 40> kKeywords = {
      "return", "if",      "else",   "elif",    "for",     "while",   "def",    "class",
      "break",  "continue", "pass",  "raise",   "throw",   "try",     "except", "catch",
      "finally", "import", "from",   "switch",  "case",    "do",      "int",    "long",
      "double", "float",   "char",   "bool",    "boolean", "void",    "var",    "let",
      "const",  "auto",    "public", "private", "static",  "final",   "yield",  "assert"};
  auto t = trim(line);
  if (t.size() > 2 && t.front() == '`' && t.back() == '`') t = trim(t.substr(1, t.size() - 2));
  if (t.empty() || looks_like_prose(t)) return false;
  if (line.front() == ' ' || line.front() == '\t') return true;
  if (has_code_punctuation(t)) return true;
  const auto word = t.substr(0, t.find_first_of(" :"));
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<std::string_view> plain_lines(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split_lines(text)) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
  }
  return out;
}

std::string join_code(std::span<const std::string_view> lines) {
  std::size_t first = 0;
  std::size_t last = lines.size();
  while (first < last && trim(lines[first]).empty()) ++first;
  while (last > first && trim(lines[last - 1]).empty()) --last;
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) out += '\n';
    out += rtrim(lines[i]);
  }
  return out;
}

bool is_fence(std::string_view line) { return trim(line).substr(0, 3) == "```"; }

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

Role parse_role(std::string_view text) {
  if (text == "system") return Role::kSystem;
  if (text == "user") return Role::kUser;
  if (text == "assistant") return Role::kAssistant;
  throw std::invalid_argument("unknown role '" + std::string(text) + "'");
}

std::string_view to_string(PromptLevel level) {
  switch (level) {
    case PromptLevel::kBasePrompt:
      return "base";
    case PromptLevel::kNameErr:
      return "name-err";
    case PromptLevel::kNameErrFailLine:
      return "name-err-fail-line";
    case PromptLevel::kNameErrTestBody:
      return "name-err-test-body";
  }
  return "base";
}

std::string_view to_string(FeedbackLevel level) {
  switch (level) {
    case FeedbackLevel::kBaseFeedback:
      return "base";
    case FeedbackLevel::kNameErr:
      return "name-err";
    case FeedbackLevel::kNameErrFailLine:
      return "name-err-fail-line";
    case FeedbackLevel::kDynamic:
      return "dynamic";
  }
  return "base";
}

std::string_view to_string(SystemMessageKind kind) {
  return kind == SystemMessageKind::kAprTool ? "apr-tool" : "assistant";
}

PromptLevel parse_prompt_level(std::string_view text) {
  for (auto level : {PromptLevel::kBasePrompt, PromptLevel::kNameErr,
                     PromptLevel::kNameErrFailLine, PromptLevel::kNameErrTestBody}) {
    if (to_string(level) == text) return level;
  }
  throw std::invalid_argument("unknown prompt variant '" + std::string(text) + "'");
}

FeedbackLevel parse_feedback_level(std::string_view text) {
  for (auto level : {FeedbackLevel::kBaseFeedback, FeedbackLevel::kNameErr,
                     FeedbackLevel::kNameErrFailLine, FeedbackLevel::kDynamic}) {
    if (to_string(level) == text) return level;
  }
  throw std::invalid_argument("unknown feedback variant '" + std::string(text) + "'");
}

SystemMessageKind parse_system_message(std::string_view text) {
  if (text == "apr-tool") return SystemMessageKind::kAprTool;
  if (text == "assistant") return SystemMessageKind::kAssistant;
  throw std::invalid_argument("unknown system message '" + std::string(text) + "'");
}

RenderedPrompt system_message(const PromptVariant& variant) {
  const auto text = variant.system_msg == SystemMessageKind::kAprTool ? kAprToolSystemMessage
                                                                      : kAssistantSystemMessage;
  return {std::string(text), Role::kSystem, {}};
}

RenderedPrompt build_initial_prompt(const BugInstance& bug, const TestFailureInfo& failure,
                                    const PromptVariant& variant) {
  RenderedPrompt prompt;
  prompt.role = Role::kUser;
  const auto noun = unit_noun(bug.scenario);
  const ContextSplit split = split_context(bug);

  PromptLevel level = variant.level;
  if (level == PromptLevel::kNameErrFailLine && failure.failing_line.empty()) {
    prompt.warnings.push_back("bug '" + bug.id +
                              "': no failing test line available; using name-err prompt");
    level = PromptLevel::kNameErr;
  }
  if (level == PromptLevel::kNameErrTestBody && !failure.test_body) {
    prompt.warnings.push_back("bug '" + bug.id +
                              "': no test body available; using name-err prompt");
    level = PromptLevel::kNameErr;
  }
  int shots = std::max(0, variant.shots);
  if (shots > static_cast<int>(bug.few_shot_examples.size())) {
    prompt.warnings.push_back("bug '" + bug.id + "': only " +
                              std::to_string(bug.few_shot_examples.size()) +
                              " few-shot examples available");
    shots = static_cast<int>(bug.few_shot_examples.size());
  }

  std::ostringstream out;
  for (int i = 0; i < shots; ++i) {
    const auto& example = bug.few_shot_examples[static_cast<std::size_t>(i)];
    out << "Here is an example of a previous bug fix in this project.\n";
    out << "Buggy " << noun << ":\n";
    code_block(out, example.buggy);
    out << "Fixed " << noun << ":\n";
    code_block(out, example.fixed);
    out << "\n";
  }

  if (bug.scenario == RepairScenario::kSingleFunction) {
    out << "The following function contains a bug.\n";
    code_block(out, split.buggy_code);
  } else {
    out << "The following code contains a buggy " << noun << " that has been removed.\n";
    out << "```\n" << split.prefix << leading_ws(split.buggy_code) << kInfillIndicator << "\n";
    out << split.suffix;
    if (!split.suffix.empty() && split.suffix.back() != '\n') out << "\n";
    out << "```\n";
    out << "This was the original buggy " << noun
        << " which was removed by the infill location:\n";
    code_block(out, split.buggy_code);
  }

  failure_section(out, failure, level);

  if (bug.scenario == RepairScenario::kSingleFunction) {
    out << "Please provide a fixed version of the function.";
  } else {
    out << "Please provide the correct " << noun << " at the infill location.";
  }
  prompt.text = out.str();
  return prompt;
}

RenderedPrompt build_feedback(const ValidationResult& result, const TestFailureInfo& original,
                              const FeedbackVariant& variant) {
  RenderedPrompt prompt;
  prompt.role = Role::kUser;
  std::ostringstream out;

  if (result.is_pass()) throw ContractViolation("build_feedback called on a passing result");
  if (const auto* compile = std::get_if<CompileError>(&result.verdict)) {
    out << "The fixed version has a compilation error:\n"
        << truncate_lines(compile->message, kMaxDiagnosticLines);
  } else if (const auto* timeout = std::get_if<Timeout>(&result.verdict)) {
    out << "The fixed version timed out after " << timeout->seconds << " seconds.";
  } else {
    const auto& failure = std::get<TestFailure>(result.verdict).info;
    switch (variant.level) {
      case FeedbackLevel::kBaseFeedback:
        out << kIncorrectFeedback;
        break;
      case FeedbackLevel::kNameErr:
        out << kIncorrectFeedback << "\n";
        failure_section(out, failure, PromptLevel::kNameErr);
        break;
      case FeedbackLevel::kNameErrFailLine:
        out << kIncorrectFeedback << "\n";
        failure_section(out, failure, PromptLevel::kNameErrFailLine);
        break;
      case FeedbackLevel::kDynamic:
        if (same_original_failure(result, original)) {
          out << kStillFailsFeedback;
        } else {
          out << kIncorrectFeedback << "\n";
          failure_section(out, failure, PromptLevel::kNameErrFailLine);
        }
        break;
    }
  }
  prompt.text = strip_trailing_newlines(out.str());
  return prompt;
}

std::string_view alt_instruction_sentence(RepairScenario scenario) {
  switch (scenario) {
    case RepairScenario::kSingleLine:
      return "Please generate an alternative fix line.";
    case RepairScenario::kSingleHunk:
      return "Please generate an alternative fix hunk.";
    case RepairScenario::kSingleFunction:
      return "Please generate an alternative fixed function.";
  }
  return "Please generate an alternative fix line.";
}

RenderedPrompt build_alt_instruction(const RenderedPrompt& initial,
                                     std::span<const Patch> plausible) {
  if (plausible.empty()) {
    throw ContractViolation("build_alt_instruction needs at least one plausible patch");
  }
  std::ostringstream out;
  out << initial.text << "\n\n";
  out << "The following fixes already pass all tests:\n";
  int n = 1;
  for (const auto& patch : plausible) {
    out << n++ << ".\n";
    code_block(out, patch.text);
  }
  out << alt_instruction_sentence(plausible.front().scenario);
  return {out.str(), Role::kUser, {}};
}

Patch extract_patch(std::string_view model_output, RepairScenario scenario) {
  const auto lines = plain_lines(model_output);

  // First non-empty fenced block.
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!is_fence(lines[i])) continue;
    std::size_t j = i + 1;
    while (j < lines.size() && !is_fence(lines[j])) ++j;
    std::string code = join_code(std::span(lines).subspan(i + 1, j - i - 1));
    if (!code.empty()) return Patch{std::move(code), scenario};
    i = j;
  }

  // Longest run of code-looking lines; blank lines may sit inside a run.
  std::size_t best_begin = 0, best_len = 0;
  for (std::size_t i = 0; i < lines.size();) {
    if (!looks_like_code(lines[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::size_t end = i;
    while (j < lines.size() && (looks_like_code(lines[j]) || trim(lines[j]).empty())) {
      if (!trim(lines[j]).empty()) end = j + 1;
      ++j;
    }
    if (end - i > best_len) {
      best_begin = i;
      best_len = end - i;
    }
    i = std::max(j, i + 1);
  }
  if (best_len > 0) {
    std::string code = join_code(std::span(lines).subspan(best_begin, best_len));
    // A single line holding one inline-code span, e.g. "Use `x = 1` here."
    const auto open = code.find('`');
    const auto close = code.rfind('`');
    if (code.find('\n') == std::string::npos && open != std::string::npos && close > open &&
        std::count(code.begin(), code.end(), '`') == 2) {
      const std::string outside = code.substr(0, open) + code.substr(close + 1);
      if (!has_code_punctuation(outside)) {
        code = std::string(trim(std::string_view(code).substr(open + 1, close - open - 1)));
      }
    }
    if (!trim(code).empty()) return Patch{std::move(code), scenario};
  }
  throw UnparseableResponse();
}

}  // namespace convrepair
