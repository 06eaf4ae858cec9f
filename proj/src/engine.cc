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

#include "convrepair/engine.h"

#include <chrono>
#include <deque>
#include <iomanip>
#include <ostream>

namespace convrepair {
namespace {

using Clock = std::chrono::steady_clock;

struct Exchange {
  ChatMessage patch;
  ChatMessage feedback;
};

// Everything one repair run needs while it talks to the backend.
class RepairRun {
 public:
  RepairRun(const BugInstance& bug, const TestFailureInfo& original, ChatBackend& backend,
            PatchValidator& validator, const EngineConfig& config, std::string session)
      : bug_(bug),
        original_(original),
        backend_(backend),
        validator_(validator),
        config_(config),
        session_(std::move(session)),
        max_tries_(config.resolved_max_tries(bug.scenario)),
        start_(Clock::now()) {
    outcome_.bug_id = bug.id;
  }

  RepairOutcome run() {
    const RenderedPrompt system = system_message(config_.prompt_variant);
    const RenderedPrompt initial = build_initial_prompt(bug_, original_, config_.prompt_variant);
    outcome_.warnings = initial.warnings;
    system_ = {Role::kSystem, system.text};
    initial_ = {Role::kUser, initial.text};

    backend_.begin_session(session_);
    if (conversation_phase()) alternative_phase(initial);
    return std::move(outcome_);
  }

 private:
  bool budget_left() const { return outcome_.ledger.tries_used < max_tries_; }

  bool time_left() {
    const std::chrono::duration<double> elapsed = Clock::now() - start_;
    if (elapsed.count() >= config_.end_to_end_timeout_s) outcome_.cut_off = true;
    return !outcome_.cut_off;
  }

  void fail(const std::string& message) {
    RepairEvent event;
    event.conversation_id = conversation_;
    event.verdict = "error";
    event.feedback = message;
    outcome_.events.push_back(std::move(event));
    outcome_.error = message;
  }

  std::vector<ChatMessage> assemble(const std::deque<Exchange>& history) const {
    std::vector<ChatMessage> messages{system_, initial_};
    for (const auto& ex : history) {
      messages.push_back(ex.patch);
      messages.push_back(ex.feedback);
    }
    return messages;
  }

  // Sends the conversation, evicting the oldest exchanges while it does not
  // fit. Returns nullopt after recording an error event.
  std::optional<ChatResponse> query(std::deque<Exchange>& history) {
    for (;;) {
      auto messages = assemble(history);
      if (estimate_tokens(messages) > backend_.max_context_tokens() && !history.empty()) {
        history.pop_front();
        continue;
      }
      try {
        return backend_.complete({session_, std::move(messages)});
      } catch (const BackendError& e) {
        if (e.kind() == BackendError::Kind::kContextOverflow && !history.empty()) {
          history.pop_front();
          continue;
        }
        fail(std::string("backend: ") + e.what());
        return std::nullopt;
      }
    }
  }

  void charge(const ChatResponse& response, RepairEvent& event) {
    outcome_.ledger.tries_used += 1;
    outcome_.ledger.charge(response.usage, config_.cost_rate_per_1k);
    event.try_index = outcome_.ledger.tries_used;
    event.conversation_id = conversation_;
    event.usage = response.usage;
  }

  std::optional<ValidationResult> check(const Patch& patch) {
    try {
      return validator_.validate(patch);
    } catch (const InfrastructureError& e) {
      fail(std::string("validation: ") + e.what());
    } catch (const PatchError& e) {
      fail(std::string("apply: ") + e.what());
    }
    return std::nullopt;
  }

  // Returns true when a plausible patch was found.
  bool conversation_phase() {
    while (budget_left() && time_left()) {
      ++conversation_;
      std::deque<Exchange> history;
      for (int length = 0; length < config_.max_conv_length && budget_left() && time_left();
           ++length) {
        auto response = query(history);
        if (!response) return false;

        RepairEvent event;
        event.phase = EventPhase::kConversation;
        charge(*response, event);

        std::string feedback;
        try {
          Patch patch = extract_patch(response->reply.content, bug_.scenario);
          patch.origin = PatchOrigin::kConversationalRepair;
          patch.try_index = event.try_index;
          event.patch = patch.text;
          auto result = check(patch);
          if (!result) return false;
          event.verdict = std::string(result->name());
          if (result->is_pass()) {
            outcome_.plausible.push_back(std::move(patch));
            outcome_.events.push_back(std::move(event));
            return true;
          }
          feedback = build_feedback(*result, original_, config_.feedback_variant).text;
        } catch (const UnparseableResponse&) {
          event.verdict = "unparseable";
          feedback = std::string(kUnparseableFeedback);
        }
        event.feedback = feedback;
        outcome_.events.push_back(std::move(event));
        history.push_back({response->reply, {Role::kUser, std::move(feedback)}});
      }
    }
    return false;
  }

  void alternative_phase(const RenderedPrompt& initial) {
    while (budget_left() && time_left()) {
      ++conversation_;
      const RenderedPrompt alt = build_alt_instruction(initial, outcome_.plausible);
      std::vector<ChatMessage> messages{system_, {Role::kUser, alt.text}};
      if (estimate_tokens(messages) > backend_.max_context_tokens()) {
        outcome_.warnings.push_back("alternative prompt no longer fits the context window");
        return;
      }
      ChatResponse response;
      try {
        response = backend_.complete({session_, std::move(messages)});
      } catch (const BackendError& e) {
        fail(std::string("backend: ") + e.what());
        return;
      }

      RepairEvent event;
      event.phase = EventPhase::kAlternative;
      charge(response, event);
      try {
        Patch patch = extract_patch(response.reply.content, bug_.scenario);
        patch.origin = PatchOrigin::kPlausibleGeneration;
        patch.try_index = event.try_index;
        event.patch = patch.text;
        auto result = check(patch);
        if (!result) return;
        event.verdict = std::string(result->name());
        if (result->is_pass()) {
          const std::string key = normalize_patch(patch.text);
          bool seen = false;
          for (const auto& p : outcome_.plausible) seen = seen || normalize_patch(p.text) == key;
          if (seen) {
            event.verdict = "duplicate";
          } else {
            outcome_.plausible.push_back(std::move(patch));
          }
        }
      } catch (const UnparseableResponse&) {
        event.verdict = "unparseable";
      }
      outcome_.events.push_back(std::move(event));
    }
  }

  const BugInstance& bug_;
  const TestFailureInfo& original_;
  ChatBackend& backend_;
  PatchValidator& validator_;
  const EngineConfig& config_;
  std::string session_;
  int max_tries_;
  Clock::time_point start_;
  ChatMessage system_;
  ChatMessage initial_;
  int conversation_ = 0;
  RepairOutcome outcome_;
};

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

int default_max_tries(RepairScenario scenario) {
  return scenario == RepairScenario::kSingleFunction ? 100 : 200;
}

void check_config(const EngineConfig& config) {
  if (config.max_tries && *config.max_tries < 1) throw std::invalid_argument("max_tries must be >= 1");
  if (config.max_conv_length < 1) throw std::invalid_argument("max_conv_length must be >= 1");
  if (config.cost_rate_per_1k < 0) throw std::invalid_argument("cost rate must be >= 0");
  if (config.prompt_variant.shots < 0) throw std::invalid_argument("shots must be >= 0");
  if (config.end_to_end_timeout_s <= 0) throw std::invalid_argument("timeout must be > 0");
}

void CostLedger::charge(const TokenUsage& usage, double rate_per_1k) {
  total_prompt_tokens += usage.prompt_tokens;
  total_completion_tokens += usage.completion_tokens;
  dollars = compute_cost(*this, rate_per_1k);
}

double compute_cost(const CostLedger& ledger, double rate_per_1k) {
  const auto tokens = ledger.total_prompt_tokens + ledger.total_completion_tokens;
  return static_cast<double>(tokens) / 1000.0 * rate_per_1k;
}

std::string_view to_string(EventPhase phase) {
  return phase == EventPhase::kConversation ? "conversation" : "alternative";
}

std::string normalize_patch(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  char quote = 0;
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quote != 0) {
      out += c;
      if (c == '\\' && i + 1 < text.size()) {
        out += text[++i];
      } else if (c == quote) {
        quote = 0;
      }
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
    if (c == '"' || c == '\'') quote = c;
  }
  return out;
}

RepairOutcome conversational_repair(const BugInstance& bug, const TestFailureInfo& original,
                                    ChatBackend& backend, PatchValidator& validator,
                                    const EngineConfig& config, const std::string& session_id) {
  check_config(config);
  RepairRun run(bug, original, backend, validator, config,
                session_id.empty() ? bug.id : session_id);
  return run.run();
}

std::vector<AblationRow> run_ablation(std::span<const BugInstance> corpus,
                                      const BugRepairFn& repair,
                                      std::span<const EngineConfig> grid) {
  std::vector<AblationRow> rows;
  for (const auto& config : grid) {
    AblationRow row;
    row.config = config;
    double tries = 0;
    double dollars = 0;
    for (const auto& bug : corpus) {
      RepairOutcome outcome;
      try {
        outcome = repair(bug, config);
      } catch (const std::exception& e) {
        outcome.bug_id = bug.id;
        outcome.error = e.what();
      }
      ++row.bugs_total;
      if (!outcome.plausible.empty()) ++row.bugs_plausible;
      tries += outcome.ledger.tries_used;
      dollars += outcome.ledger.dollars;
      if (outcome.error) row.annotations.push_back(bug.id + ": " + *outcome.error);
    }
    if (row.bugs_total > 0) {
      row.mean_tries = tries / row.bugs_total;
      row.mean_dollars = dollars / row.bugs_total;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "config_id,prompt_variant,feedback_variant,max_conv_length,shots,bugs_plausible,"
         "mean_tries,mean_dollars\n";
  for (const auto& row : rows) {
    out << csv_field(row.config.id) << ',' << to_string(row.config.prompt_variant.level) << ','
        << to_string(row.config.feedback_variant.level) << ',' << row.config.max_conv_length
        << ',' << row.config.prompt_variant.shots << ',' << row.bugs_plausible << ','
        << std::setprecision(10) << row.mean_tries << ',' << row.mean_dollars << '\n';
  }
}

}  // namespace convrepair
