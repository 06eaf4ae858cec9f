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

#ifndef CONVREPAIR_BUG_MODEL_H_
#define CONVREPAIR_BUG_MODEL_H_

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace convrepair {

enum class RepairScenario { kSingleLine, kSingleHunk, kSingleFunction };

/// Manifest spelling: "single-line", "single-hunk", "single-function".
std::string_view to_string(RepairScenario scenario);
RepairScenario parse_scenario(std::string_view text);

/// 1-based inclusive line range.
struct LineSpan {
  int start = 0;
  int end = 0;

  bool contains(const LineSpan& other) const {
    return start <= other.start && other.end <= end;
  }
  int line_count() const { return end - start + 1; }
  bool operator==(const LineSpan&) const = default;
};

struct FewShotExample {
  std::string buggy;
  std::string fixed;
};

/// One repairable bug. Paths are absolute after loading; `source_text` holds
/// the LF-normalized original contents of `source_file()`.
struct BugInstance {
  std::string id;
  std::filesystem::path project_dir;
  std::filesystem::path source_path;  // relative to project_dir
  std::string source_text;
  LineSpan bug_span;
  LineSpan function_span;
  RepairScenario scenario = RepairScenario::kSingleLine;
  std::string build_cmd;
  std::string test_cmd;
  std::vector<std::string> original_failing_tests;
  std::vector<FewShotExample> few_shot_examples;
  std::optional<std::string> reference_patch;
  int timeout_s = 300;

  std::filesystem::path source_file() const { return project_dir / source_path; }
};

enum class PatchOrigin { kConversationalRepair, kPlausibleGeneration };

struct Patch {
  std::string text;
  RepairScenario scenario = RepairScenario::kSingleLine;
  PatchOrigin origin = PatchOrigin::kConversationalRepair;
  int try_index = 0;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Loads a JSON corpus manifest. Relative paths resolve against the
/// manifest's directory. Throws CorpusError with file:line for syntax errors
/// and with the bug id for invariant violations.
std::vector<BugInstance> load_corpus(const std::filesystem::path& manifest_path);

/// Same as load_corpus but over an in-memory document; `origin` names it in
/// error messages.
std::vector<BugInstance> parse_corpus(std::string_view json_text,
                                      const std::filesystem::path& base_dir,
                                      std::string_view origin = "<manifest>");

/// Throws CorpusError naming the bug when an invariant does not hold.
void check_invariants(const BugInstance& bug);

std::string normalize_line_endings(std::string_view text);

/// Splits LF text into lines, each keeping its trailing '\n' (the last line
/// may lack one).
std::vector<std::string_view> split_lines(std::string_view text);

struct ContextSplit {
  std::string prefix;
  std::string buggy_code;
  std::string suffix;
};

/// prefix + buggy_code + suffix is byte-identical to the enclosing function.
ContextSplit split_context(const BugInstance& bug);

/// Text of the lines in `span`, or throws PatchError when out of bounds.
std::string span_text(std::string_view source, LineSpan span);

/// Replaces `span` in `source` with `replacement`. A replacement whose first
/// non-blank line is unindented takes the span's leading indentation.
std::string replace_span(std::string_view source, LineSpan span,
                         std::string_view replacement);

/// Writes the original source with bug_span replaced by patch.text into the
/// workspace copy and returns the patched file's path.
std::filesystem::path apply_patch(const BugInstance& bug, const Patch& patch,
                                  const std::filesystem::path& workspace);

/// A private copy of a bug's project directory. Removed on destruction unless
/// keep() was called.
class Workspace {
 public:
  static Workspace create(const BugInstance& bug,
                          const std::filesystem::path& root);

  Workspace(Workspace&& other) noexcept;
  Workspace& operator=(Workspace&& other) noexcept;
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;
  ~Workspace();

  const std::filesystem::path& path() const { return path_; }
  void keep() { keep_ = true; }

 private:
  explicit Workspace(std::filesystem::path path) : path_(std::move(path)) {}

  std::filesystem::path path_;
  bool keep_ = false;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace convrepair

#endif  // CONVREPAIR_BUG_MODEL_H_
