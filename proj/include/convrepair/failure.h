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

#ifndef CONVREPAIR_FAILURE_H_
#define CONVREPAIR_FAILURE_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "convrepair/bug_model.h"

namespace convrepair {

/// What a prompt needs to know about one failing test.
struct TestFailureInfo {
  std::string test_name;
  std::string error_message;
  std::string failing_line;  // empty when no frame resolved into test sources
  std::optional<std::string> test_body;
  std::string failing_location;  // "file:line" of the frame used, metadata only

  bool operator==(const TestFailureInfo&) const = default;
};

struct Pass {
  bool operator==(const Pass&) const = default;
};
struct CompileError {
  std::string message;
  bool operator==(const CompileError&) const = default;
};
struct TestFailure {
  TestFailureInfo info;  // primary failure
  std::vector<std::string> all_failing;
  bool operator==(const TestFailure&) const = default;
};
struct Timeout {
  int seconds = 0;
  bool operator==(const Timeout&) const = default;
};

struct ValidationResult {
  std::variant<Pass, CompileError, TestFailure, Timeout> verdict;

  bool is_pass() const { return std::holds_alternative<Pass>(verdict); }
  /// "pass", "compile_error", "test_failure" or "timeout".
  std::string_view name() const;
  bool operator==(const ValidationResult&) const = default;
};

/// The build/test harness itself is broken (missing command, spawn failure).
/// Never a property of the patch.
class InfrastructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoFailureParsed : public std::runtime_error {
 public:
  NoFailureParsed() : std::runtime_error("no failure parsed") {}
};

/// One failure as reported by a runner, before source lookup.
struct ReportedFailure {
  std::string test_name;
  std::string error_message;
  /// (file, line) pairs, innermost frame first.
  std::vector<std::pair<std::string, int>> frames;
};

/// A test-runner output dialect.
class FailureParser {
 public:
  virtual ~FailureParser() = default;
  virtual std::string_view name() const = 0;
  virtual std::vector<ReportedFailure> parse(std::string_view output) const = 0;
};

/// `PASS <name>` / `FAIL <name>: <message>` lines with optional
/// `  at <file>:<line>` continuations.
class LineProtocolParser final : public FailureParser {
 public:
  std::string_view name() const override { return "line-protocol"; }
  std::vector<ReportedFailure> parse(std::string_view output) const override;
};

/// JUnit stack traces, either Defects4J style (`--- Class::test`) or the
/// plain JUnit text runner (`1) test(Class)`).
class JUnitParser final : public FailureParser {
 public:
  std::string_view name() const override { return "junit"; }
  std::vector<ReportedFailure> parse(std::string_view output) const override;
};

/// Tries each registered dialect in turn; the first one that reports any
/// failure wins. Failures are in report order.
std::vector<ReportedFailure> parse_failures(std::string_view output);

struct ExtractOptions {
  bool include_test_body = false;
  /// Files under test_sources that are not test code (e.g. the buggy source).
  std::vector<std::filesystem::path> exclude_files;
};

/// Resolves the innermost frame that points into `test_sources` and reads the
/// failing line (and optionally the whole test function) from it.
TestFailureInfo resolve_failure(const ReportedFailure& failure,
                                const std::filesystem::path& test_sources,
                                const ExtractOptions& options = {});

/// First failure in `raw_output`. Throws NoFailureParsed when there is none.
TestFailureInfo extract_failure_info(std::string_view raw_output,
                                     const std::filesystem::path& test_sources,
                                     const ExtractOptions& options = {});

/// Exception/assertion identifier: text before the first ':' or whitespace.
std::string error_class(std::string_view error_message);

/// Same test and same error class. Only TestFailure can match.
bool same_original_failure(const ValidationResult& result,
                           const TestFailureInfo& original);

/// Keeps the first `max_lines` lines, marking the cut.
std::string truncate_lines(std::string_view text, std::size_t max_lines);

inline constexpr std::size_t kMaxDiagnosticLines = 20;

/// Runs the bug's build and test commands inside `workspace` (patch already
/// applied). Build and test share the bug's timeout.
ValidationResult validate(const BugInstance& bug, const std::filesystem::path& workspace,
                          const ExtractOptions& options = {});

/// Something that can judge a candidate patch.
class PatchValidator {
 public:
  virtual ~PatchValidator() = default;
  virtual ValidationResult validate(const Patch& patch) = 0;
};

/// Applies each patch to one workspace and validates it there. Results are
/// memoized by exact patch text because validation is deterministic for
/// deterministic commands.
class WorkspaceValidator final : public PatchValidator {
 public:
  WorkspaceValidator(const BugInstance& bug, std::filesystem::path workspace,
                     bool include_test_body = false, bool memoize = true);

  ValidationResult validate(const Patch& patch) override;
  int commands_run() const { return runs_; }

 private:
  const BugInstance& bug_;
  std::filesystem::path workspace_;
  ExtractOptions options_;
  bool memoize_;
  int runs_ = 0;
  std::mutex mu_;
  std::map<std::string, ValidationResult> cache_;
};

}  // namespace convrepair

#endif  // CONVREPAIR_FAILURE_H_
