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

#ifndef CONVREPAIR_LLM_CLIENT_H_
#define CONVREPAIR_LLM_CLIENT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "convrepair/chat.h"

namespace convrepair {

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;

  std::int64_t total() const { return prompt_tokens + completion_tokens; }
  TokenUsage& operator+=(const TokenUsage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    return *this;
  }
  bool operator==(const TokenUsage&) const = default;
};

enum class BackendKind { kHttp, kScripted };

struct BackendConfig {
  BackendKind kind = BackendKind::kScripted;
  std::string model_name = "gpt-3.5-turbo-0301";
  double temperature = 1.0;
  double top_p = 1.0;
  int max_output_tokens = 512;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  std::filesystem::path script_path;
  std::int64_t max_context_tokens = 4096;
  int retries = 3;
  int backoff_initial_ms = 1000;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument on out-of-range settings.
void check_config(const BackendConfig& config);

class BackendError : public std::runtime_error {
 public:
  enum class Kind { kTransport, kRateLimit, kContextOverflow, kProtocol, kConfig };

  BackendError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }
  bool retryable() const { return kind_ == Kind::kTransport || kind_ == Kind::kRateLimit; }

 private:
  Kind kind_;
};

struct ChatRequest {
  /// Names one repair run; scripted turn counters are kept per session.
  std::string session_id;
  std::vector<ChatMessage> messages;
};

struct ChatResponse {
  ChatMessage reply;
  TokenUsage usage;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  /// Throws BackendError.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::int64_t max_context_tokens() const = 0;
  /// Resets per-session state before a new repair run.
  virtual void begin_session(const std::string& /*session_id*/) {}
};

/// ceil(bytes / 4). Approximate; backend-reported usage takes precedence.
std::int64_t estimate_tokens(std::string_view text);
/// Sum of estimate_tokens over message contents.
std::int64_t estimate_tokens(std::span<const ChatMessage> messages);

/// One scripted rule. `turn` is the 1-based query index within a session;
/// every `contains` needle must occur in some user message of the request.
/// A rule with several replies draws one per query from a seeded RNG.
struct ScriptRule {
  std::optional<int> turn;
  std::vector<std::string> contains;
  std::vector<std::string> replies;
};

inline constexpr std::string_view kScriptDefaultReply = "I am unable to suggest a fix.";

/// Deterministic backend driven by match rules. First matching rule wins;
/// no match yields kScriptDefaultReply.
class ScriptedBackend final : public ChatBackend {
 public:
  ScriptedBackend(std::vector<ScriptRule> rules, const BackendConfig& config);

  /// Parses the JSON script format. Throws std::invalid_argument.
  static std::vector<ScriptRule> parse_script(std::string_view json_text);

  ChatResponse complete(const ChatRequest& request) override;
  std::int64_t max_context_tokens() const override { return config_.max_context_tokens; }
  void begin_session(const std::string& session_id) override;

  const std::vector<ScriptRule>& rules() const { return rules_; }

 private:
  std::vector<ScriptRule> rules_;
  BackendConfig config_;
  std::mutex mu_;
  std::map<std::string, int> turns_;
};

/// Loads a script file into a ScriptedBackend.
std::unique_ptr<ScriptedBackend> scripted_oracle(const std::filesystem::path& script,
                                                 const BackendConfig& config = {});

/// Chat-completions over HTTP(S). The API key is read from the environment
/// variable named by api_key_env at call time and never stored.
class HttpBackend final : public ChatBackend {
 public:
  explicit HttpBackend(BackendConfig config);

  ChatResponse complete(const ChatRequest& request) override;
  std::int64_t max_context_tokens() const override { return config_.max_context_tokens; }

  /// Request body for `messages`; exposed for tests.
  std::string request_body(std::span<const ChatMessage> messages) const;
  /// Parses a response body, estimating usage when the server reports none.
  static ChatResponse parse_response(std::string_view body,
                                     std::span<const ChatMessage> messages);

 private:
  ChatResponse attempt(const ChatRequest& request) const;

  BackendConfig config_;
  std::string base_url_;
  std::string path_;
};

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config);

}  // namespace convrepair

#endif  // CONVREPAIR_LLM_CLIENT_H_
