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

#include "convrepair/bug_model.h"

#include <atomic>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace convrepair {
namespace {

const std::set<std::string> kRequiredKeys = {
    "id",       "source_path", "bug_span",      "function_span",
    "scenario", "build_cmd",   "test_cmd",      "failing_tests"};
const std::set<std::string> kOptionalKeys = {"few_shot", "reference_patch",
                                             "timeout_s", "project_dir"};

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  int line = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

LineSpan parse_span(const json& value, const std::string& key) {
  if (!value.is_array() || value.size() != 2 || !value[0].is_number_integer() ||
      !value[1].is_number_integer()) {
    throw std::invalid_argument("'" + key + "' must be [start, end]");
  }
  return LineSpan{value[0].get<int>(), value[1].get<int>()};
}

std::string require_string(const json& obj, const std::string& key) {
  const json& v = obj.at(key);
  if (!v.is_string()) throw std::invalid_argument("'" + key + "' must be a string");
  return v.get<std::string>();
}

std::string leading_whitespace(std::string_view line) {
  std::size_t n = 0;
  while (n < line.size() && (line[n] == ' ' || line[n] == '\t')) ++n;
  return std::string(line.substr(0, n));
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

BugInstance parse_bug(const json& entry, const fs::path& base_dir) {
  if (!entry.is_object()) throw std::invalid_argument("bug entry must be an object");
  for (const auto& [key, _] : entry.items()) {
    if (!kRequiredKeys.contains(key) && !kOptionalKeys.contains(key)) {
      throw std::invalid_argument("unknown key '" + key + "'");
    }
  }
  for (const auto& key : kRequiredKeys) {
    if (!entry.contains(key)) throw std::invalid_argument("missing key '" + key + "'");
  }

  BugInstance bug;
  bug.id = require_string(entry, "id");
  fs::path source = require_string(entry, "source_path");
  fs::path project = entry.contains("project_dir")
                         ? fs::path(require_string(entry, "project_dir"))
                         : source.parent_path();
  const fs::path relative = source.lexically_relative(project);
  if (relative.empty() || *relative.begin() == "..") {
    throw std::invalid_argument("source_path is not inside project_dir");
  }
  bug.project_dir = fs::weakly_canonical(base_dir / project);
  bug.source_path = relative;
  bug.bug_span = parse_span(entry.at("bug_span"), "bug_span");
  bug.function_span = parse_span(entry.at("function_span"), "function_span");
  bug.scenario = parse_scenario(require_string(entry, "scenario"));
  bug.build_cmd = require_string(entry, "build_cmd");
  bug.test_cmd = require_string(entry, "test_cmd");

  const json& failing = entry.at("failing_tests");
  if (!failing.is_array()) throw std::invalid_argument("'failing_tests' must be an array");
  for (const auto& name : failing) {
    if (!name.is_string()) throw std::invalid_argument("'failing_tests' entries must be strings");
    bug.original_failing_tests.push_back(name.get<std::string>());
  }

  if (entry.contains("few_shot")) {
    const json& shots = entry.at("few_shot");
    if (!shots.is_array()) throw std::invalid_argument("'few_shot' must be an array");
    for (const auto& shot : shots) {
      if (!shot.is_object() || !shot.contains("buggy") || !shot.contains("fixed")) {
        throw std::invalid_argument("'few_shot' entries need 'buggy' and 'fixed'");
      }
      bug.few_shot_examples.push_back(
          {require_string(shot, "buggy"), require_string(shot, "fixed")});
    }
  }
  if (entry.contains("reference_patch") && !entry.at("reference_patch").is_null()) {
    bug.reference_patch = require_string(entry, "reference_patch");
  }
  if (entry.contains("timeout_s")) {
    const json& t = entry.at("timeout_s");
    if (!t.is_number_integer()) throw std::invalid_argument("'timeout_s' must be an integer");
    bug.timeout_s = t.get<int>();
  }

  const fs::path file = bug.source_file();
  if (!fs::is_regular_file(file)) {
    throw std::invalid_argument("source file not found: " + file.string());
  }
  bug.source_text = normalize_line_endings(read_file(file));
  return bug;
}

}  // namespace

std::string_view to_string(RepairScenario scenario) {
  switch (scenario) {
    case RepairScenario::kSingleLine:
      return "single-line";
    case RepairScenario::kSingleHunk:
      return "single-hunk";
    case RepairScenario::kSingleFunction:
      return "single-function";
  }
  return "unknown";
}

RepairScenario parse_scenario(std::string_view text) {
  if (text == "single-line" || text == "sl") return RepairScenario::kSingleLine;
  if (text == "single-hunk" || text == "sh") return RepairScenario::kSingleHunk;
  if (text == "single-function" || text == "sf") return RepairScenario::kSingleFunction;
  throw std::invalid_argument("unknown scenario '" + std::string(text) + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<BugInstance> load_corpus(const fs::path& manifest_path) {
  std::string text;
  try {
    text = read_file(manifest_path);
  } catch (const std::exception& e) {
    throw CorpusError(e.what());
  }
  return parse_corpus(text, manifest_path.parent_path(), manifest_path.string());
}

std::vector<BugInstance> parse_corpus(std::string_view json_text,
                                      const fs::path& base_dir,
                                      std::string_view origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    std::ostringstream msg;
    msg << origin << ":" << line_of_offset(json_text, e.byte == 0 ? 0 : e.byte - 1)
        << ": parse error: " << e.what();
    throw CorpusError(msg.str());
  }
  if (!doc.is_array()) {
    throw CorpusError(std::string(origin) + ":1: manifest must be a JSON array of bugs");
  }

  std::vector<BugInstance> bugs;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& entry = doc[i];
    std::string label = "entry #" + std::to_string(i + 1);
    if (entry.is_object() && entry.contains("id") && entry["id"].is_string()) {
      label = "bug '" + entry["id"].get<std::string>() + "'";
    }
    BugInstance bug;
    try {
      bug = parse_bug(entry, base_dir);
    } catch (const std::exception& e) {
      throw CorpusError(std::string(origin) + ": " + label + ": " + e.what());
    }
    if (!seen.insert(bug.id).second) {
      throw CorpusError(std::string(origin) + ": duplicate bug id '" + bug.id + "'");
    }
    check_invariants(bug);
    bugs.push_back(std::move(bug));
  }
  return bugs;
}

void check_invariants(const BugInstance& bug) {
  auto fail = [&](const std::string& what) {
    throw CorpusError("bug '" + bug.id + "': " + what);
  };
  if (bug.id.empty()) fail("empty id");
  if (bug.bug_span.start < 1 || bug.bug_span.end < bug.bug_span.start) fail("invalid bug_span");
  if (bug.function_span.start < 1 || bug.function_span.end < bug.function_span.start) {
    fail("invalid function_span");
  }
  if (!bug.function_span.contains(bug.bug_span)) fail("bug_span is not inside function_span");
  const int lines = static_cast<int>(split_lines(bug.source_text).size());
  if (bug.function_span.end > lines) fail("function_span exceeds the source file");
  switch (bug.scenario) {
    case RepairScenario::kSingleLine:
      if (bug.bug_span.line_count() != 1) fail("single-line bug_span must cover one line");
      break;
    case RepairScenario::kSingleHunk:
      break;
    case RepairScenario::kSingleFunction:
      if (bug.bug_span != bug.function_span) {
        fail("single-function bug_span must equal function_span");
      }
      break;
  }
  if (bug.original_failing_tests.empty()) fail("failing_tests is empty");
  if (bug.timeout_s <= 0) fail("timeout_s must be positive");
  if (bug.build_cmd.empty() || bug.test_cmd.empty()) fail("empty build/test command");
}

std::string normalize_line_endings(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      out.push_back(text[i]);
    }
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
    lines.push_back(text.substr(pos, end - pos));
    pos = end;
  }
  return lines;
}

std::string span_text(std::string_view source, LineSpan span) {
  const auto lines = split_lines(source);
  if (span.start < 1 || span.end < span.start || span.end > static_cast<int>(lines.size())) {
    throw PatchError("span " + std::to_string(span.start) + "-" + std::to_string(span.end) +
                     " is outside the file (" + std::to_string(lines.size()) + " lines)");
  }
  std::string out;
  for (int i = span.start; i <= span.end; ++i) out += lines[i - 1];
  return out;
}

ContextSplit split_context(const BugInstance& bug) {
  const std::string_view src = bug.source_text;
  ContextSplit split;
  split.buggy_code = span_text(src, bug.bug_span);
  // Validates the function span as well.
  span_text(src, bug.function_span);
  if (bug.bug_span.start > bug.function_span.start) {
    split.prefix = span_text(src, {bug.function_span.start, bug.bug_span.start - 1});
  }
  if (bug.bug_span.end < bug.function_span.end) {
    split.suffix = span_text(src, {bug.bug_span.end + 1, bug.function_span.end});
  }
  return split;
}

std::string replace_span(std::string_view source, LineSpan span,
                         std::string_view replacement) {
  const auto lines = split_lines(source);
  const std::string original = span_text(source, span);

  std::string body(replacement);
  const auto body_lines = split_lines(body);
  const std::string indent = leading_whitespace(lines[span.start - 1]);
  std::string_view first_content;
  for (auto line : body_lines) {
    if (!is_blank(line)) {
      first_content = line;
      break;
    }
  }
  if (!indent.empty() && !first_content.empty() && leading_whitespace(first_content).empty()) {
    std::string indented;
    for (auto line : body_lines) {
      if (!is_blank(line)) indented += indent;
      indented += line;
    }
    body = std::move(indented);
  }
  if (!original.empty() && original.back() == '\n' && (body.empty() || body.back() != '\n')) {
    body.push_back('\n');
  }

  std::string out;
  out.reserve(source.size() + body.size());
  for (int i = 1; i < span.start; ++i) out += lines[i - 1];
  out += body;
  for (int i = span.end + 1; i <= static_cast<int>(lines.size()); ++i) out += lines[i - 1];
  return out;
}

fs::path apply_patch(const BugInstance& bug, const Patch& patch, const fs::path& workspace) {
  if (patch.scenario != bug.scenario) {
    throw PatchError("patch scenario " + std::string(to_string(patch.scenario)) +
                     " does not match bug '" + bug.id + "' (" +
                     std::string(to_string(bug.scenario)) + ")");
  }
  const fs::path target = workspace / bug.source_path;
  std::error_code ec;
  if (!fs::is_regular_file(target, ec)) {
    throw PatchError("workspace not initialized: " + target.string() + " is missing");
  }

  // Lines above the span must still match the original; anything else means
  // the workspace is not a copy of this bug's project.
  const std::string current = normalize_line_endings(read_file(target));
  const auto current_lines = split_lines(current);
  const auto original_lines = split_lines(bug.source_text);
  if (static_cast<int>(current_lines.size()) < bug.bug_span.start) {
    throw PatchError("span mismatch: workspace copy of " + bug.source_path.string() +
                     " is shorter than bug_span");
  }
  for (int i = 0; i + 1 < bug.bug_span.start; ++i) {
    if (current_lines[i] != original_lines[i]) {
      throw PatchError("span mismatch: workspace copy of " + bug.source_path.string() +
                       " differs at line " + std::to_string(i + 1));
    }
  }

  write_file(target, replace_span(bug.source_text, bug.bug_span, patch.text));
  return target;
}

Workspace Workspace::create(const BugInstance& bug, const fs::path& root) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  fs::create_directories(root);
  fs::path dir;
  for (int attempt = 0;; ++attempt) {
    std::ostringstream name;
    name << bug.id << "-" << std::hex << rd() << "-" << counter.fetch_add(1);
    dir = root / name.str();
    if (fs::create_directory(dir)) break;
    if (attempt > 16) throw std::runtime_error("cannot create workspace under " + root.string());
  }
  Workspace ws(dir);
  fs::copy(bug.project_dir, dir, fs::copy_options::recursive);
  return ws;
}

Workspace::Workspace(Workspace&& other) noexcept
    : path_(std::move(other.path_)), keep_(other.keep_) {
  other.path_.clear();
}

Workspace& Workspace::operator=(Workspace&& other) noexcept {
  if (this != &other) {
    if (!path_.empty() && !keep_) {
      std::error_code ec;
      fs::remove_all(path_, ec);
    }
    path_ = std::move(other.path_);
    keep_ = other.keep_;
    other.path_.clear();
  }
  return *this;
}

Workspace::~Workspace() {
  if (!path_.empty() && !keep_) {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
}

}  // namespace convrepair
