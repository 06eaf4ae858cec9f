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

#include "convrepair/llm_client.h"

#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include "convrepair/bug_model.h"
#include "httplib.h"
#include "json.hpp"

using nlohmann::json;

namespace convrepair {
namespace {

std::uint64_t fnv1a(std::uint64_t hash, std::string_view bytes) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::uint64_t pool_seed(std::uint64_t seed, const std::string& session, int turn) {
  std::uint64_t h = 14695981039346656037ULL;
  h = fnv1a(h, std::to_string(seed));
  h = fnv1a(h, "\x1f");
  h = fnv1a(h, session);
  h = fnv1a(h, "\x1f");
  h = fnv1a(h, std::to_string(turn));
  return h;
}

bool rule_matches(const ScriptRule& rule, int turn, const std::vector<ChatMessage>& messages) {
  if (rule.turn && *rule.turn != turn) return false;
  for (const auto& needle : rule.contains) {
    bool found = false;
    for (const auto& m : messages) {
      if (m.role == Role::kUser && m.content.find(needle) != std::string::npos) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

void check_context(std::span<const ChatMessage> messages, std::int64_t limit) {
  const auto tokens = estimate_tokens(messages);
  if (tokens > limit) {
    throw BackendError(BackendError::Kind::kContextOverflow,
                       "context overflow: ~" + std::to_string(tokens) + " tokens exceeds " +
                           std::to_string(limit));
  }
}

}  // namespace

void check_config(const BackendConfig& config) {
  if (config.temperature < 0) throw std::invalid_argument("temperature must be >= 0");
  if (config.max_context_tokens <= 0) throw std::invalid_argument("max_context_tokens must be > 0");
  if (config.retries < 1) throw std::invalid_argument("retries must be >= 1");
  if (config.top_p <= 0 || config.top_p > 1) throw std::invalid_argument("top_p must be in (0, 1]");
  if (config.max_output_tokens <= 0) throw std::invalid_argument("max_output_tokens must be > 0");
}

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::int64_t estimate_tokens(std::span<const ChatMessage> messages) {
  std::int64_t total = 0;
  for (const auto& m : messages) total += estimate_tokens(m.content);
  return total;
}

// --- scripted ---------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules, const BackendConfig& config)
    : rules_(std::move(rules)), config_(config) {
  check_config(config_);
}

std::vector<ScriptRule> ScriptedBackend::parse_script(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed script: ") + e.what());
  }
  if (!doc.is_array()) throw std::invalid_argument("malformed script: expected an array of rules");

  std::vector<ScriptRule> rules;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& entry = doc[i];
    const std::string where = "malformed script: rule #" + std::to_string(i + 1) + ": ";
    if (!entry.is_object()) throw std::invalid_argument(where + "not an object");
    for (const auto& [key, _] : entry.items()) {
      if (key != "match" && key != "reply" && key != "pool") {
        throw std::invalid_argument(where + "unknown key '" + key + "'");
      }
    }
    ScriptRule rule;
    if (entry.contains("match")) {
      const json& match = entry["match"];
      if (!match.is_object()) throw std::invalid_argument(where + "'match' must be an object");
      for (const auto& [key, value] : match.items()) {
        if (key == "turn") {
          if (value.is_null()) continue;
          if (!value.is_number_integer() || value.get<int>() < 1) {
            throw std::invalid_argument(where + "'turn' must be a positive integer or null");
          }
          rule.turn = value.get<int>();
        } else if (key == "contains") {
          if (value.is_null()) continue;
          if (value.is_string()) {
            rule.contains.push_back(value.get<std::string>());
          } else if (value.is_array()) {
            for (const auto& s : value) {
              if (!s.is_string()) throw std::invalid_argument(where + "'contains' entries must be strings");
              rule.contains.push_back(s.get<std::string>());
            }
          } else {
            throw std::invalid_argument(where + "'contains' must be a string, array or null");
          }
        } else {
          throw std::invalid_argument(where + "unknown match key '" + key + "'");
        }
      }
    }
    if (entry.contains("reply") == entry.contains("pool")) {
      throw std::invalid_argument(where + "needs exactly one of 'reply' or 'pool'");
    }
    if (entry.contains("reply")) {
      if (!entry["reply"].is_string()) throw std::invalid_argument(where + "'reply' must be a string");
      rule.replies.push_back(entry["reply"].get<std::string>());
    } else {
      const json& pool = entry["pool"];
      if (!pool.is_array() || pool.empty()) {
        throw std::invalid_argument(where + "'pool' must be a non-empty array");
      }
      for (const auto& s : pool) {
        if (!s.is_string()) throw std::invalid_argument(where + "'pool' entries must be strings");
        rule.replies.push_back(s.get<std::string>());
      }
    }
    for (const auto& r : rule.replies) {
      if (r.empty()) throw std::invalid_argument(where + "empty reply");
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

void ScriptedBackend::begin_session(const std::string& session_id) {
  std::lock_guard lock(mu_);
  turns_[session_id] = 0;
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  check_context(request.messages, config_.max_context_tokens);
  int turn = 0;
  {
    std::lock_guard lock(mu_);
    turn = ++turns_[request.session_id];
  }
  std::string reply(kScriptDefaultReply);
  for (const auto& rule : rules_) {
    if (!rule_matches(rule, turn, request.messages)) continue;
    if (rule.replies.size() == 1) {
      reply = rule.replies.front();
    } else {
      std::mt19937_64 rng(pool_seed(config_.seed, request.session_id, turn));
      reply = rule.replies[rng() % rule.replies.size()];
    }
    break;
  }
  ChatResponse response;
  response.usage.prompt_tokens = estimate_tokens(request.messages);
  response.usage.completion_tokens = estimate_tokens(reply);
  response.reply = {Role::kAssistant, std::move(reply)};
  return response;
}

std::unique_ptr<ScriptedBackend> scripted_oracle(const std::filesystem::path& script,
                                                 const BackendConfig& config) {
  std::string text;
  try {
    text = read_file(script);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("malformed script: ") + e.what());
  }
  return std::make_unique<ScriptedBackend>(ScriptedBackend::parse_script(text), config);
}

// --- http -------------------------------------------------------------------

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
  check_config(config_);
  const auto scheme = config_.endpoint.find("://");
  if (scheme == std::string::npos) {
    throw BackendError(BackendError::Kind::kConfig, "endpoint must be an absolute URL");
  }
  const auto slash = config_.endpoint.find('/', scheme + 3);
  base_url_ = config_.endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : config_.endpoint.substr(slash);
}

std::string HttpBackend::request_body(std::span<const ChatMessage> messages) const {
  json body;
  body["model"] = config_.model_name;
  body["temperature"] = config_.temperature;
  body["top_p"] = config_.top_p;
  body["max_tokens"] = config_.max_output_tokens;
  body["messages"] = json::array();
  for (const auto& m : messages) {
    body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return body.dump();
}

ChatResponse HttpBackend::parse_response(std::string_view body,
                                         std::span<const ChatMessage> messages) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(BackendError::Kind::kProtocol, std::string("bad response JSON: ") + e.what());
  }
  const json* content = nullptr;
  if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
    const json& choice = doc["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
      content = &choice["message"]["content"];
    }
  }
  if (content == nullptr) {
    throw BackendError(BackendError::Kind::kProtocol, "response has no choices[0].message.content");
  }

  ChatResponse response;
  response.reply = {Role::kAssistant, content->get<std::string>()};
  const json* usage = doc.contains("usage") && doc["usage"].is_object() ? &doc["usage"] : nullptr;
  if (usage && usage->contains("prompt_tokens") && usage->contains("completion_tokens")) {
    response.usage.prompt_tokens = (*usage)["prompt_tokens"].get<std::int64_t>();
    response.usage.completion_tokens = (*usage)["completion_tokens"].get<std::int64_t>();
  } else {
    response.usage.prompt_tokens = estimate_tokens(messages);
    response.usage.completion_tokens = estimate_tokens(response.reply.content);
  }
  return response;
}

ChatResponse HttpBackend::attempt(const ChatRequest& request) const {
  httplib::Client client(base_url_);
  client.set_connection_timeout(30, 0);
  client.set_read_timeout(300, 0);

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw BackendError(BackendError::Kind::kConfig,
                         "environment variable " + config_.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  auto res = client.Post(path_, headers, request_body(request.messages), "application/json");
  if (!res) {
    throw BackendError(BackendError::Kind::kTransport,
                       "request to " + base_url_ + " failed: " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 200) return parse_response(res->body, request.messages);
  const std::string detail = "HTTP " + std::to_string(status) + ": " + res->body.substr(0, 200);
  if (status == 429) throw BackendError(BackendError::Kind::kRateLimit, detail);
  if (status >= 500) throw BackendError(BackendError::Kind::kTransport, detail);
  if (res->body.find("context_length_exceeded") != std::string::npos) {
    throw BackendError(BackendError::Kind::kContextOverflow, detail);
  }
  if (status == 401 || status == 403) throw BackendError(BackendError::Kind::kConfig, detail);
  throw BackendError(BackendError::Kind::kProtocol, detail);
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
  check_context(request.messages, config_.max_context_tokens);
  auto delay = std::chrono::milliseconds(config_.backoff_initial_ms);
  for (int i = 1;; ++i) {
    try {
      return attempt(request);
    } catch (const BackendError& e) {
      if (!e.retryable() || i >= config_.retries) throw;
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config) {
  if (config.kind == BackendKind::kHttp) return std::make_unique<HttpBackend>(config);
  if (config.script_path.empty()) {
    throw std::invalid_argument("scripted backend needs a script path");
  }
  return scripted_oracle(config.script_path, config);
}

}  // namespace convrepair
