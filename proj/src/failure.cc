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

#include "convrepair/failure.h"

#include <algorithm>
#include <regex>
#include <set>

#include "convrepair/subprocess.h"

namespace fs = std::filesystem;

namespace convrepair {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool starts_with_ws(std::string_view s) { return !s.empty() && (s[0] == ' ' || s[0] == '\t'); }

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : split_lines(text)) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
  }
  return out;
}

// "  at file.py:12" -> (file.py, 12)
std::optional<std::pair<std::string, int>> parse_protocol_frame(std::string_view line) {
  if (!starts_with_ws(line)) return std::nullopt;
  auto body = trim(line);
  if (body.substr(0, 3) != "at ") return std::nullopt;
  body = trim(body.substr(3));
  const auto colon = body.rfind(':');
  if (colon == std::string_view::npos || colon + 1 >= body.size()) return std::nullopt;
  const auto digits = body.substr(colon + 1);
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  return std::make_pair(std::string(body.substr(0, colon)), std::stoi(std::string(digits)));
}

bool is_excluded(const fs::path& file, const std::vector<fs::path>& excluded) {
  std::error_code ec;
  const auto canon = fs::weakly_canonical(file, ec);
  for (const auto& ex : excluded) {
    if (fs::weakly_canonical(ex, ec) == canon) return true;
  }
  return false;
}

std::vector<fs::path> find_source_files(const fs::path& root, const std::string& name,
                                        const std::vector<fs::path>& excluded) {
  std::vector<fs::path> found;
  std::error_code ec;
  const fs::path direct = root / name;
  if (fs::is_regular_file(direct, ec) && !is_excluded(direct, excluded)) {
    found.push_back(direct);
    return found;
  }
  const std::string base = fs::path(name).filename().string();
  for (auto it = fs::recursive_directory_iterator(root, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (it->is_regular_file(ec) && it->path().filename() == base &&
        !is_excluded(it->path(), excluded)) {
      found.push_back(it->path());
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

bool looks_like_definition(std::string_view line, const std::string& test_name) {
  const auto at = line.find(test_name + "(");
  if (at == std::string_view::npos) return false;
  const auto head = line.substr(0, at);
  for (std::string_view kw : {"def ", "void ", "public ", "fun ", "func ", "TEST"}) {
    if (head.find(kw) != std::string_view::npos) return true;
  }
  return false;
}

std::optional<std::string> extract_test_body(std::string_view text, const std::string& test_name) {
  const auto lines = lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!looks_like_definition(lines[i], test_name)) continue;
    std::string body;
    const auto header = trim(lines[i]);
    if (!header.empty() && header.back() == ':') {
      // Indentation-delimited body.
      const auto indent = lines[i].find_first_not_of(" \t");
      body += std::string(lines[i]) + "\n";
      std::size_t last = i;
      for (std::size_t j = i + 1; j < lines.size(); ++j) {
        if (trim(lines[j]).empty()) continue;
        if (lines[j].find_first_not_of(" \t") <= indent) break;
        last = j;
      }
      for (std::size_t j = i + 1; j <= last; ++j) body += std::string(lines[j]) + "\n";
    } else {
      int depth = 0;
      bool opened = false;
      for (std::size_t j = i; j < lines.size(); ++j) {
        body += std::string(lines[j]) + "\n";
        for (char c : lines[j]) {
          if (c == '{') {
            ++depth;
            opened = true;
          } else if (c == '}') {
            --depth;
          }
        }
        if (opened && depth <= 0) break;
      }
    }
    while (!body.empty() && body.back() == '\n') body.pop_back();
    return body;
  }
  return std::nullopt;
}

}  // namespace

std::string_view ValidationResult::name() const {
  switch (verdict.index()) {
    case 0:
      return "pass";
    case 1:
      return "compile_error";
    case 2:
      return "test_failure";
    default:
      return "timeout";
  }
}

std::vector<ReportedFailure> LineProtocolParser::parse(std::string_view output) const {
  std::vector<ReportedFailure> failures;
  for (auto line : lines_of(output)) {
    if (line.substr(0, 5) == "FAIL ") {
      auto rest = line.substr(5);
      ReportedFailure f;
      const auto colon = rest.find(':');
      if (colon == std::string_view::npos) {
        f.test_name = std::string(trim(rest));
      } else {
        f.test_name = std::string(trim(rest.substr(0, colon)));
        f.error_message = std::string(trim(rest.substr(colon + 1)));
      }
      if (f.test_name.empty()) continue;
      if (f.error_message.empty()) f.error_message = "test failed";
      failures.push_back(std::move(f));
    } else if (!failures.empty()) {
      if (auto frame = parse_protocol_frame(line)) failures.back().frames.push_back(*frame);
    }
  }
  return failures;
}

std::vector<ReportedFailure> JUnitParser::parse(std::string_view output) const {
  static const std::regex kDefects4j(R"(^--- (\S+)::(\S+)\s*$)");
  static const std::regex kPlain(R"(^\d+\) ([\w$]+)\(([\w.$]+)\)\s*$)");
  static const std::regex kFrame(R"(^\s+at \S+\(([^():]+):(\d+)\)\s*$)");

  std::vector<ReportedFailure> failures;
  const auto lines = lines_of(output);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line(lines[i]);
    std::smatch m;
    std::string name;
    if (std::regex_match(line, m, kDefects4j)) {
      name = m[2];
    } else if (std::regex_match(line, m, kPlain)) {
      name = m[1];
    } else {
      continue;
    }
    ReportedFailure f;
    f.test_name = name;
    std::size_t j = i + 1;
    while (j < lines.size() && trim(lines[j]).empty()) ++j;
    if (j < lines.size() && !std::regex_match(std::string(lines[j]), kFrame)) {
      f.error_message = std::string(trim(lines[j]));
      ++j;
    }
    for (; j < lines.size(); ++j) {
      const std::string frame_line(lines[j]);
      std::smatch fm;
      if (std::regex_match(frame_line, fm, kFrame)) {
        f.frames.emplace_back(fm[1], std::stoi(fm[2]));
      } else if (trim(frame_line).empty() || !starts_with_ws(frame_line)) {
        break;
      }
      // Other indented lines ("... 23 more", wrapped messages) are skipped.
    }
    if (f.error_message.empty()) f.error_message = "test failed";
    failures.push_back(std::move(f));
    i = j - 1;
  }
  return failures;
}

std::vector<ReportedFailure> parse_failures(std::string_view output) {
  static const LineProtocolParser line_protocol;
  static const JUnitParser junit;
  for (const FailureParser* parser : {static_cast<const FailureParser*>(&line_protocol),
                                      static_cast<const FailureParser*>(&junit)}) {
    auto failures = parser->parse(output);
    if (!failures.empty()) return failures;
  }
  return {};
}

TestFailureInfo resolve_failure(const ReportedFailure& failure, const fs::path& test_sources,
                                const ExtractOptions& options) {
  TestFailureInfo info;
  info.test_name = failure.test_name;
  info.error_message = failure.error_message;

  std::optional<fs::path> test_file;
  for (const auto& [file, line_no] : failure.frames) {
    for (const auto& candidate : find_source_files(test_sources, file, options.exclude_files)) {
      const std::string content = normalize_line_endings(read_file(candidate));
      const auto lines = lines_of(content);
      if (line_no < 1 || line_no > static_cast<int>(lines.size())) continue;
      const auto text = trim(lines[line_no - 1]);
      if (text.empty()) continue;
      info.failing_line = std::string(text);
      info.failing_location = fs::path(file).filename().string() + ":" + std::to_string(line_no);
      test_file = candidate;
      break;
    }
    if (test_file) break;
  }

  if (options.include_test_body) {
    if (test_file) info.test_body = extract_test_body(read_file(*test_file), info.test_name);
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(test_sources, ec);
         !info.test_body && !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
      if (!it->is_regular_file(ec) || is_excluded(it->path(), options.exclude_files)) continue;
      info.test_body = extract_test_body(read_file(it->path()), info.test_name);
    }
  }
  return info;
}

TestFailureInfo extract_failure_info(std::string_view raw_output, const fs::path& test_sources,
                                     const ExtractOptions& options) {
  const auto failures = parse_failures(raw_output);
  if (failures.empty()) throw NoFailureParsed();
  return resolve_failure(failures.front(), test_sources, options);
}

std::string error_class(std::string_view error_message) {
  const auto msg = trim(error_message);
  const auto end = msg.find_first_of(": \t");
  return std::string(msg.substr(0, end));
}

bool same_original_failure(const ValidationResult& result, const TestFailureInfo& original) {
  const auto* failure = std::get_if<TestFailure>(&result.verdict);
  if (failure == nullptr) return false;
  return failure->info.test_name == original.test_name &&
         error_class(failure->info.error_message) == error_class(original.error_message);
}

std::string truncate_lines(std::string_view text, std::size_t max_lines) {
  const auto lines = lines_of(trim(text));
  std::string out;
  for (std::size_t i = 0; i < lines.size() && i < max_lines; ++i) {
    if (i > 0) out += '\n';
    out += lines[i];
  }
  if (lines.size() > max_lines) {
    out += "\n... (" + std::to_string(lines.size() - max_lines) + " more lines)";
  }
  return out;
}

ValidationResult validate(const BugInstance& bug, const fs::path& workspace,
                          const ExtractOptions& options) {
  using namespace std::chrono;
  const auto budget = milliseconds(static_cast<long long>(bug.timeout_s) * 1000);
  const auto check_spawn = [&](const CommandResult& r, const std::string& cmd) {
    if (r.exit_code == 127 || r.exit_code == 126) {
      throw InfrastructureError("cannot run '" + cmd + "' (exit " + std::to_string(r.exit_code) +
                                "): " + truncate_lines(r.output, 5));
    }
  };

  const CommandResult build = run_command(bug.build_cmd, workspace, budget);
  if (build.timed_out) return {Timeout{bug.timeout_s}};
  check_spawn(build, bug.build_cmd);
  if (build.exit_code != 0) {
    std::string diag(trim(build.output));
    if (diag.empty()) diag = "build command exited with status " + std::to_string(build.exit_code);
    return {CompileError{std::move(diag)}};
  }

  const auto remaining = std::max(milliseconds(1), budget - build.elapsed);
  const CommandResult test = run_command(bug.test_cmd, workspace, remaining);
  if (test.timed_out) return {Timeout{bug.timeout_s}};
  check_spawn(test, bug.test_cmd);
  if (test.exit_code == 0) return {Pass{}};

  ExtractOptions opts = options;
  opts.exclude_files.push_back(workspace / bug.source_path);
  const auto failures = parse_failures(test.output);
  TestFailure failure;
  if (failures.empty()) {
    // Nonzero exit without a recognizable report still fails the patch.
    std::string last;
    for (auto line : lines_of(test.output)) {
      if (!trim(line).empty()) last = std::string(trim(line));
    }
    failure.info.test_name = "<unknown>";
    failure.info.error_message =
        last.empty() ? "test command exited with status " + std::to_string(test.exit_code) : last;
    failure.all_failing = {failure.info.test_name};
    return {std::move(failure)};
  }

  std::set<std::string> names;
  const ReportedFailure* primary = &failures.front();
  for (const auto& f : failures) {
    names.insert(f.test_name);
    if (f.test_name < primary->test_name) primary = &f;
  }
  failure.info = resolve_failure(*primary, workspace, opts);
  failure.all_failing.assign(names.begin(), names.end());
  return {std::move(failure)};
}

WorkspaceValidator::WorkspaceValidator(const BugInstance& bug, fs::path workspace,
                                       bool include_test_body, bool memoize)
    : bug_(bug), workspace_(std::move(workspace)), memoize_(memoize) {
  options_.include_test_body = include_test_body;
}

ValidationResult WorkspaceValidator::validate(const Patch& patch) {
  std::lock_guard lock(mu_);
  if (memoize_) {
    if (auto it = cache_.find(patch.text); it != cache_.end()) return it->second;
  }
  apply_patch(bug_, patch, workspace_);
  ++runs_;
  ValidationResult result = convrepair::validate(bug_, workspace_, options_);
  if (memoize_) cache_.emplace(patch.text, result);
  return result;
}

}  // namespace convrepair
