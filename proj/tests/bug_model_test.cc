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

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "convrepair/bug_model.h"
#include "test_support.h"

namespace fs = std::filesystem;

namespace convrepair {
namespace {

using testing::TempDir;
using testing::toy_bug;
using testing::toy_corpus;

// Independent line slicer used as the oracle for span arithmetic.
std::string slice_lines(const std::string& text, int first, int last) {
  std::istringstream in(text);
  std::string line;
  std::string out;
  for (int n = 1; std::getline(in, line); ++n) {
    if (n >= first && n <= last) out += line + "\n";
  }
  return out;
}

std::string one_bug_manifest(const std::string& id) {
  return R"([{"id": ")" + id + R"(", "source_path": "toy-1/gcd.py", "bug_span": [6, 6],
    "function_span": [4, 7], "scenario": "single-line", "build_cmd": "true",
    "test_cmd": "true", "failing_tests": ["t"], "few_shot": []}])";
}

BugInstance three_line_bug(RepairScenario scenario = RepairScenario::kSingleLine) {
  BugInstance bug;
  bug.id = "mini";
  bug.source_text = "int f(int x) {\n  return x + 1;\n}\n";
  bug.function_span = {1, 3};
  bug.bug_span = scenario == RepairScenario::kSingleFunction ? LineSpan{1, 3} : LineSpan{2, 2};
  bug.scenario = scenario;
  bug.original_failing_tests = {"t"};
  return bug;
}

TEST(LoadCorpus, ToyCorpusHasExpectedScenarioMix) {
  const auto& bugs = toy_corpus();
  ASSERT_EQ(bugs.size(), 5u);
  int sl = 0, sh = 0, sf = 0;
  for (const auto& b : bugs) {
    sl += b.scenario == RepairScenario::kSingleLine;
    sh += b.scenario == RepairScenario::kSingleHunk;
    sf += b.scenario == RepairScenario::kSingleFunction;
  }
  EXPECT_EQ(sl, 3);
  EXPECT_EQ(sh, 1);
  EXPECT_EQ(sf, 1);
}

TEST(LoadCorpus, SingleWellFormedBug) {
  const auto bugs = parse_corpus(one_bug_manifest("toy-1"), testing::fixtures_dir() / "toy");
  ASSERT_EQ(bugs.size(), 1u);
  EXPECT_EQ(bugs[0].id, "toy-1");
  EXPECT_EQ(bugs[0].timeout_s, 300);
  EXPECT_TRUE(bugs[0].few_shot_examples.empty());
  EXPECT_EQ(bugs[0].source_path, fs::path("gcd.py"));
}

TEST(LoadCorpus, DuplicateIdIsNamed) {
  std::string text = one_bug_manifest("toy-1");
  text = text.substr(0, text.size() - 1) + "," + one_bug_manifest("toy-1").substr(1);
  try {
    parse_corpus(text, testing::fixtures_dir() / "toy");
    FAIL() << "duplicate id accepted";
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("toy-1"), std::string::npos) << e.what();
  }
}

TEST(LoadCorpus, ParseErrorReportsFileAndLine) {
  TempDir dir;
  const fs::path manifest = dir.path() / "broken.json";
  write_file(manifest, "[\n  {\"id\": \"a\",\n   oops\n]\n");
  try {
    load_corpus(manifest);
    FAIL() << "malformed manifest accepted";
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find(manifest.string() + ":3"), std::string::npos)
        << e.what();
  }
}

TEST(LoadCorpus, InvariantViolationNamesBug) {
  std::string text = one_bug_manifest("bad-span");
  text.replace(text.find("[6, 6]"), 6, "[9, 9]");
  try {
    parse_corpus(text, testing::fixtures_dir() / "toy");
    FAIL() << "bug span outside function accepted";
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("bad-span"), std::string::npos) << e.what();
  }
  std::string empty_tests = one_bug_manifest("no-tests");
  empty_tests.replace(empty_tests.find("[\"t\"]"), 5, "[]");
  EXPECT_THROW(parse_corpus(empty_tests, testing::fixtures_dir() / "toy"), CorpusError);
}

TEST(LoadCorpus, UnknownKeyRejected) {
  std::string text = one_bug_manifest("x");
  text.insert(text.find("\"few_shot\""), "\"colour\": 1, ");
  EXPECT_THROW(parse_corpus(text, testing::fixtures_dir() / "toy"), CorpusError);
}

TEST(SplitContext, ThreeLineFunction) {
  const auto split = split_context(three_line_bug());
  EXPECT_EQ(split.prefix, "int f(int x) {\n");
  EXPECT_EQ(split.buggy_code, "  return x + 1;\n");
  EXPECT_EQ(split.suffix, "}\n");
}

TEST(SplitContext, SingleFunctionHasEmptyContext) {
  const auto bug = three_line_bug(RepairScenario::kSingleFunction);
  const auto split = split_context(bug);
  EXPECT_EQ(split.prefix, "");
  EXPECT_EQ(split.suffix, "");
  EXPECT_EQ(split.buggy_code, bug.source_text);
}

TEST(SplitContext, OutOfBoundsSpanThrows) {
  BugInstance bug = three_line_bug();
  bug.bug_span = {4, 4};
  bug.function_span = {1, 4};
  EXPECT_THROW(split_context(bug), PatchError);
}

TEST(SplitContext, ToyOneReconstructsFixtureRegion) {
  const auto& bug = toy_bug("toy-1");
  std::ifstream in(testing::fixtures_dir() / "toy" / "toy-1" / "gcd.py", std::ios::binary);
  const std::string raw((std::istreambuf_iterator<char>(in)), {});
  const auto split = split_context(bug);
  EXPECT_EQ(split.prefix + split.buggy_code + split.suffix, slice_lines(raw, 4, 7));
  EXPECT_EQ(split.buggy_code, slice_lines(raw, 6, 6));
}

TEST(SplitContext, ConcatenationIdentityForEveryToyBug) {
  for (const auto& bug : toy_corpus()) {
    const auto split = split_context(bug);
    EXPECT_EQ(split.prefix + split.buggy_code + split.suffix,
              slice_lines(bug.source_text, bug.function_span.start, bug.function_span.end))
        << bug.id;
  }
}

TEST(SplitContext, ConcatenationIdentityOnRandomSpans) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    std::string text;
    for (int i = 0; i < n; ++i) text += "line" + std::to_string(i) + std::string(rng() % 4, ' ') + "\n";
    BugInstance bug;
    bug.source_text = text;
    const int fs_ = 1 + static_cast<int>(rng() % n);
    const int fe = fs_ + static_cast<int>(rng() % (n - fs_ + 1));
    const int bs = fs_ + static_cast<int>(rng() % (fe - fs_ + 1));
    const int be = bs + static_cast<int>(rng() % (fe - bs + 1));
    bug.function_span = {fs_, fe};
    bug.bug_span = {bs, be};
    const auto split = split_context(bug);
    ASSERT_EQ(split.prefix + split.buggy_code + split.suffix, slice_lines(text, fs_, fe));
    ASSERT_EQ(split.buggy_code, slice_lines(text, bs, be));
    // Identity replacement reproduces the file.
    ASSERT_EQ(replace_span(text, bug.bug_span, split.buggy_code), text);
  }
}

TEST(NormalizeLineEndings, ConvertsCrLf) {
  EXPECT_EQ(normalize_line_endings("a\r\nb\rc\n"), "a\nb\nc\n");
}

class ApplyPatchTest : public ::testing::Test {
 protected:
  TempDir root_;
};

TEST_F(ApplyPatchTest, IdentityPatchIsByteIdentical) {
  for (const auto& bug : toy_corpus()) {
    Workspace ws = Workspace::create(bug, root_.path());
    const Patch identity{split_context(bug).buggy_code, bug.scenario};
    const fs::path out = apply_patch(bug, identity, ws.path());
    EXPECT_EQ(read_file(out), read_file(bug.source_file())) << bug.id;
  }
}

TEST_F(ApplyPatchTest, EmptyWorkspaceIsRejected) {
  const auto& bug = toy_bug("toy-1");
  try {
    apply_patch(bug, Patch{"x", bug.scenario}, root_.path());
    FAIL() << "empty workspace accepted";
  } catch (const PatchError& e) {
    EXPECT_NE(std::string(e.what()).find("workspace not initialized"), std::string::npos);
  }
}

TEST_F(ApplyPatchTest, ReferencePatchMatchesFixedFixture) {
  const auto& bug = toy_bug("toy-1");
  const std::uint64_t before = testing::hash_tree(bug.project_dir);
  Workspace ws = Workspace::create(bug, root_.path());
  const fs::path out = apply_patch(bug, Patch{*bug.reference_patch, bug.scenario}, ws.path());
  EXPECT_EQ(read_file(out),
            read_file(testing::fixtures_dir() / "toy" / "fixed" / "toy-1" / "gcd.py"));
  EXPECT_EQ(testing::hash_tree(bug.project_dir), before);
}

TEST_F(ApplyPatchTest, UnindentedPatchTakesSpanIndentation) {
  const auto& bug = toy_bug("toy-1");
  Workspace ws = Workspace::create(bug, root_.path());
  const fs::path out = apply_patch(bug, Patch{"a, b = b, a % b", bug.scenario}, ws.path());
  EXPECT_EQ(read_file(out),
            read_file(testing::fixtures_dir() / "toy" / "fixed" / "toy-1" / "gcd.py"));
}

TEST_F(ApplyPatchTest, MultiLinePatchForSingleLineBug) {
  const auto& bug = toy_bug("toy-1");
  Workspace ws = Workspace::create(bug, root_.path());
  const fs::path out =
      apply_patch(bug, Patch{"t = b\nb = a % b\na = t", bug.scenario}, ws.path());
  const std::string text = read_file(out);
  EXPECT_NE(text.find("        t = b\n        b = a % b\n        a = t\n    return a\n"),
            std::string::npos)
      << text;
}

TEST_F(ApplyPatchTest, ScenarioMismatchRejected) {
  const auto& bug = toy_bug("toy-1");
  Workspace ws = Workspace::create(bug, root_.path());
  EXPECT_THROW(apply_patch(bug, Patch{"x", RepairScenario::kSingleHunk}, ws.path()), PatchError);
}

TEST_F(ApplyPatchTest, ForeignWorkspaceIsSpanMismatch) {
  const auto& bug = toy_bug("toy-1");
  Workspace ws = Workspace::create(bug, root_.path());
  write_file(ws.path() / "gcd.py", "something else\n\n\n\n\n\n\n");
  try {
    apply_patch(bug, Patch{"x", bug.scenario}, ws.path());
    FAIL() << "foreign file accepted";
  } catch (const PatchError& e) {
    EXPECT_NE(std::string(e.what()).find("span mismatch"), std::string::npos);
  }
}

TEST_F(ApplyPatchTest, WorkspaceRemovedUnlessKept) {
  const auto& bug = toy_bug("toy-2");
  fs::path dropped, kept;
  {
    Workspace a = Workspace::create(bug, root_.path());
    Workspace b = Workspace::create(bug, root_.path());
    b.keep();
    dropped = a.path();
    kept = b.path();
    EXPECT_NE(dropped, kept);
    EXPECT_TRUE(fs::exists(dropped / "clamp.py"));
  }
  EXPECT_FALSE(fs::exists(dropped));
  EXPECT_TRUE(fs::exists(kept / "clamp.py"));
}

}  // namespace
}  // namespace convrepair
