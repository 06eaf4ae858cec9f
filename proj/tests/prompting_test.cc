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

#include <cstdlib>
#include <random>
#include <sstream>

#include "convrepair/prompting.h"
#include "test_support.h"

namespace fs = std::filesystem;

namespace convrepair {
namespace {

using testing::toy_bug;

std::size_t count_of(const std::string& hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// True when every line of `small` appears in `big` in the same order.
bool line_subsequence(const std::string& small, const std::string& big) {
  const auto a = lines(small);
  const auto b = lines(big);
  std::size_t i = 0;
  for (std::size_t j = 0; i < a.size() && j < b.size(); ++j) {
    if (a[i] == b[j]) ++i;
  }
  return i == a.size();
}

// Failure records as the toy runner reports them for the unpatched bugs.
TestFailureInfo toy_failure(const std::string& id) {
  TestFailureInfo f;
  if (id == "toy-1") {
    f = {"test_gcd_common_factor", "AssertionError: expected 4 but was 12",
         "expect_eq(4, gcd(12, 8))", std::nullopt, "test_gcd.py:10"};
    f.test_body = "def test_gcd_common_factor():\n    expect_eq(4, gcd(12, 8))\n";
  } else if (id == "toy-4") {
    f = {"test_sort_ascending", "AssertionError: expected [1, 2, 3, 5] but was [5, 3, 2, 1]",
         "expect_eq([1, 2, 3, 5], bubble_sort([5, 3, 1, 2]))", std::nullopt, "test_sorting.py:9"};
    f.test_body =
        "def test_sort_ascending():\n    expect_eq([1, 2, 3, 5], bubble_sort([5, 3, 1, 2]))\n";
  } else {
    f = {"test_fizzbuzz", "AssertionError: expected FizzBuzz but was Fizz",
         "expect_eq(\"FizzBuzz\", fizzbuzz(30))", std::nullopt, "test_fizzbuzz.py:18"};
    f.test_body = "def test_fizzbuzz():\n    expect_eq(\"FizzBuzz\", fizzbuzz(30))\n";
  }
  return f;
}

void check_golden(const std::string& name, const std::string& actual) {
  const fs::path path = testing::fixtures_dir() / "prompts" / (name + ".txt");
  if (std::getenv("CONVREPAIR_UPDATE_GOLDEN") != nullptr) {
    write_file(path, actual);
    return;
  }
  ASSERT_TRUE(fs::exists(path)) << "missing golden file " << path;
  EXPECT_EQ(actual, read_file(path)) << "golden mismatch for " << name;
}

TEST(SystemMessage, ExactTexts) {
  PromptVariant v;
  v.system_msg = SystemMessageKind::kAprTool;
  EXPECT_EQ(system_message(v).text, "You are an Automated Program Repair tool");
  EXPECT_EQ(system_message(v).role, Role::kSystem);
  v.system_msg = SystemMessageKind::kAssistant;
  EXPECT_EQ(system_message(v).text, "You are a helpful assistant");
  EXPECT_EQ(system_message(v).role, Role::kSystem);
}

TEST(InitialPrompt, GoldenFiles) {
  for (const std::string id : {"toy-1", "toy-4", "toy-5"}) {
    const auto& bug = toy_bug(id);
    for (auto level : {PromptLevel::kBasePrompt, PromptLevel::kNameErr,
                       PromptLevel::kNameErrFailLine, PromptLevel::kNameErrTestBody}) {
      PromptVariant v;
      v.level = level;
      const auto prompt = build_initial_prompt(bug, toy_failure(id), v);
      EXPECT_TRUE(prompt.warnings.empty());
      check_golden(std::string(to_string(bug.scenario)) + "__" + std::string(to_string(level)),
                   prompt.text);
    }
  }
}

TEST(InitialPrompt, RenderingIsPure) {
  const auto& bug = toy_bug("toy-4");
  const PromptVariant v;
  EXPECT_EQ(build_initial_prompt(bug, toy_failure("toy-4"), v).text,
            build_initial_prompt(bug, toy_failure("toy-4"), v).text);
}

TEST(InitialPrompt, BasePromptHasIndicatorAndNoTestName) {
  const auto& bug = toy_bug("toy-1");
  PromptVariant v;
  v.level = PromptLevel::kBasePrompt;
  const auto text = build_initial_prompt(bug, toy_failure("toy-1"), v).text;
  EXPECT_EQ(count_of(text, kInfillIndicator), 1u);
  EXPECT_EQ(text.find("test_gcd_common_factor"), std::string::npos);
}

TEST(InitialPrompt, FailLineVariantCarriesLineAndEscapedMessage) {
  const auto& bug = toy_bug("toy-1");
  TestFailureInfo f = toy_failure("toy-1");
  f.error_message = R"(junit.framework.ComparisonFailure: expected:<"[\000]"> but was:<"[]">)";
  f.failing_line = R"(assertPrint("var x ='\\0';", "var x=\"\\000\""))";
  const auto text = build_initial_prompt(bug, f, PromptVariant{}).text;
  EXPECT_NE(text.find(f.failing_line), std::string::npos);
  EXPECT_NE(text.find(R"(\000)"), std::string::npos);
  EXPECT_NE(text.find(f.error_message), std::string::npos);
}

TEST(InitialPrompt, ZeroShotHasNoExampleSection) {
  const auto& bug = toy_bug("toy-2");
  PromptVariant v;
  v.shots = 0;
  const auto text = build_initial_prompt(bug, toy_failure("toy-1"), v).text;
  EXPECT_EQ(text.find("example"), std::string::npos);
  EXPECT_EQ(text.find(bug.few_shot_examples[0].fixed), std::string::npos);
  v.shots = 2;
  const auto two = build_initial_prompt(bug, toy_failure("toy-1"), v).text;
  EXPECT_EQ(count_of(two, "example of a previous bug fix"), 2u);
}

TEST(InitialPrompt, ShotsClampedWithWarning) {
  const auto& bug = toy_bug("toy-2");
  PromptVariant v;
  v.shots = 7;
  const auto p = build_initial_prompt(bug, toy_failure("toy-1"), v);
  EXPECT_EQ(count_of(p.text, "example of a previous bug fix"), bug.few_shot_examples.size());
  EXPECT_FALSE(p.warnings.empty());
}

TEST(InitialPrompt, MissingFailLineDowngradesToNameErr) {
  const auto& bug = toy_bug("toy-1");
  TestFailureInfo f = toy_failure("toy-1");
  f.failing_line.clear();
  const auto p = build_initial_prompt(bug, f, PromptVariant{});
  ASSERT_EQ(p.warnings.size(), 1u);
  PromptVariant name_err;
  name_err.level = PromptLevel::kNameErr;
  EXPECT_EQ(p.text, build_initial_prompt(bug, f, name_err).text);
}

TEST(InitialPrompt, OrderOfSections) {
  const auto& bug = toy_bug("toy-1");
  const auto text = build_initial_prompt(bug, toy_failure("toy-1"), PromptVariant{}).text;
  const auto shot = text.find(bug.few_shot_examples[0].fixed);
  const auto hole = text.find(kInfillIndicator);
  const auto hint = text.find("a, b = a, a % b");
  const auto name = text.find("test_gcd_common_factor");
  const auto line = text.find("expect_eq(4, gcd(12, 8))");
  const auto err = text.find("expected 4 but was 12");
  EXPECT_LT(shot, hole);
  EXPECT_LT(hole, hint);
  EXPECT_LT(hint, name);
  EXPECT_LT(name, line);
  EXPECT_LT(line, err);
}

// Property over every toy bug and shot count.
TEST(InitialPrompt, MonotoneInformationAndSingleIndicator) {
  for (const auto& bug : testing::toy_corpus()) {
    TestFailureInfo f = toy_failure("toy-1");
    for (int shots = 0; shots <= 2; ++shots) {
      std::vector<std::string> texts;
      for (auto level :
           {PromptLevel::kBasePrompt, PromptLevel::kNameErr, PromptLevel::kNameErrFailLine}) {
        PromptVariant v;
        v.level = level;
        v.shots = shots;
        texts.push_back(build_initial_prompt(bug, f, v).text);
      }
      EXPECT_TRUE(line_subsequence(texts[0], texts[1])) << bug.id;
      EXPECT_TRUE(line_subsequence(texts[1], texts[2])) << bug.id;
      for (const auto& t : texts) {
        const std::string buggy = split_context(bug).buggy_code;
        if (bug.scenario == RepairScenario::kSingleFunction) {
          EXPECT_EQ(count_of(t, kInfillIndicator), 0u) << bug.id;
        } else {
          EXPECT_EQ(count_of(t, kInfillIndicator), 1u) << bug.id;
          // The hint is a fenced block holding exactly the removed code.
          EXPECT_EQ(count_of(t, "```\n" + buggy + "```\n"), 1u) << bug.id << " shots=" << shots;
        }
      }
    }
  }
}

TEST(Feedback, DynamicSameFailureIsShortSentence) {
  const auto original = testing::sample_failure();
  const auto r = testing::failing(original.test_name, "AssertionError: expected 4 but was 8");
  EXPECT_EQ(build_feedback(r, original, FeedbackVariant{}).text,
            "It still does not fix the original test failure.");
}

TEST(Feedback, CompileErrorEmbedsDiagnostic) {
  const auto original = testing::sample_failure();
  for (auto level : {FeedbackLevel::kBaseFeedback, FeedbackLevel::kNameErr,
                     FeedbackLevel::kNameErrFailLine, FeedbackLevel::kDynamic}) {
    const auto text =
        build_feedback(testing::compile_error("error: cannot find symbol (NoObjectType)"),
                       original, FeedbackVariant{level})
            .text;
    EXPECT_NE(text.find("cannot find symbol (NoObjectType)"), std::string::npos);
  }
}

TEST(Feedback, CompileDiagnosticTruncated) {
  std::string diag;
  for (int i = 1; i <= 40; ++i) diag += "diag line " + std::to_string(i) + "\n";
  const auto text =
      build_feedback(testing::compile_error(diag), testing::sample_failure(), FeedbackVariant{})
          .text;
  EXPECT_NE(text.find("diag line 20\n"), std::string::npos);
  EXPECT_EQ(text.find("diag line 21\n"), std::string::npos);
}

TEST(Feedback, BaseFeedbackHasNoTestName) {
  const auto original = testing::sample_failure("testOriginal", "AssertionError: a");
  for (const auto& r : {testing::failing("testOriginal", "AssertionError: b"),
                        testing::failing("testOther", "ValueError: c")}) {
    const auto text = build_feedback(r, original, FeedbackVariant{FeedbackLevel::kBaseFeedback}).text;
    EXPECT_EQ(text, kIncorrectFeedback);
    EXPECT_EQ(text.find("test"), std::string::npos);
  }
}

TEST(Feedback, TimeoutNamesTimeout) {
  const auto text =
      build_feedback(ValidationResult{Timeout{7}}, testing::sample_failure(), FeedbackVariant{})
          .text;
  EXPECT_NE(text.find("timed out"), std::string::npos);
  EXPECT_NE(text.find("7"), std::string::npos);
}

TEST(Feedback, PassIsContractViolation) {
  EXPECT_THROW(build_feedback(testing::pass(), testing::sample_failure(), FeedbackVariant{}),
               ContractViolation);
}

// Property: the short sentence appears iff the failure matches the original.
TEST(Feedback, DynamicRuleOnRandomResults) {
  std::mt19937 rng(3);
  const std::vector<std::string> names = {"testA", "testB", "testC"};
  const std::vector<std::string> classes = {"AssertionError", "ValueError",
                                            "java.lang.NullPointerException"};
  const auto original = testing::sample_failure("testA", "AssertionError: x");
  for (int trial = 0; trial < 300; ++trial) {
    ValidationResult r;
    const int kind = static_cast<int>(rng() % 4);
    const std::string name = names[rng() % names.size()];
    const std::string msg = classes[rng() % classes.size()] + ": v" + std::to_string(rng() % 9);
    if (kind == 0) {
      r = testing::compile_error("SyntaxError: bad " + std::to_string(trial));
    } else if (kind == 1) {
      r = ValidationResult{Timeout{1 + trial % 5}};
    } else {
      r = testing::failing(name, msg);
    }
    const auto text = build_feedback(r, original, FeedbackVariant{}).text;
    const bool same = same_original_failure(r, original);
    EXPECT_EQ(text == kStillFailsFeedback, same);
    if (!same) {
      if (kind == 0) {
        EXPECT_NE(text.find("SyntaxError: bad " + std::to_string(trial)), std::string::npos);
      } else if (kind >= 2) {
        EXPECT_NE(text.find(name), std::string::npos);
        EXPECT_NE(text.find(msg), std::string::npos);
      }
    }
  }
}

TEST(AltInstruction, ListsPatchesInOrder) {
  const RenderedPrompt initial{"INITIAL", Role::kUser, {}};
  const std::vector<Patch> one = {{"return high", RepairScenario::kSingleLine}};
  const auto p1 = build_alt_instruction(initial, one).text;
  EXPECT_EQ(p1.rfind("INITIAL", 0), 0u);
  EXPECT_EQ(count_of(p1, "return high"), 1u);
  EXPECT_TRUE(p1.ends_with("Please generate an alternative fix line."));

  const std::vector<Patch> three = {{"p_one", RepairScenario::kSingleLine},
                                    {"p_two", RepairScenario::kSingleLine},
                                    {"p_three", RepairScenario::kSingleLine}};
  const auto p3 = build_alt_instruction(initial, three).text;
  EXPECT_LT(p3.find("p_one"), p3.find("p_two"));
  EXPECT_LT(p3.find("p_two"), p3.find("p_three"));
  EXPECT_LT(p3.find("p_three"), p3.find("Please generate"));
}

TEST(AltInstruction, SingleFunctionGolden) {
  const auto& bug = toy_bug("toy-5");
  const auto initial = build_initial_prompt(bug, toy_failure("toy-5"), PromptVariant{});
  const std::vector<Patch> pl = {{*bug.reference_patch, bug.scenario}};
  const auto text = build_alt_instruction(initial, pl).text;
  EXPECT_TRUE(text.ends_with("Please generate an alternative fixed function."));
  check_golden("single-function__alt", text);
}

TEST(AltInstruction, EmptyListIsContractViolation) {
  EXPECT_THROW(build_alt_instruction(RenderedPrompt{}, std::vector<Patch>{}), ContractViolation);
}

struct ExtractCase {
  std::string output;
  std::string expected;
};

TEST(ExtractPatch, Fixtures) {
  const std::vector<ExtractCase> cases = {
      {"return x;", "return x;"},
      {"Here is the fix:\n```\nreturn x;\n```", "return x;"},
      {"```java\nfirst();\n```\nor maybe\n```java\nsecond();\n```", "first();"},
      {"```python\n    if a:\n        b()   \n```\nThis works.", "    if a:\n        b()"},
      {"The correct line is:\n\nreturn -1\n\nThis returns -1 when missing.", "return -1"},
      {"Use `a, b = b, a % b` here.", "a, b = b, a % b"},
      {"x = f(`a`, `b`)", "x = f(`a`, `b`)"},
      {"`return high`", "return high"},
      {"```\n```\n```\nx = 1\n```", "x = 1"},
  };
  for (const auto& c : cases) {
    EXPECT_EQ(extract_patch(c.output, RepairScenario::kSingleLine).text, c.expected) << c.output;
  }
}

TEST(ExtractPatch, ProseOnlyIsUnparseable) {
  try {
    extract_patch("I am unable to suggest a fix.", RepairScenario::kSingleLine);
    FAIL() << "prose accepted";
  } catch (const UnparseableResponse& e) {
    EXPECT_STREQ(e.what(), "unparseable response");
  }
  EXPECT_THROW(extract_patch("```\n\n```", RepairScenario::kSingleLine), UnparseableResponse);
}

TEST(ExtractPatch, KeepsScenario) {
  EXPECT_EQ(extract_patch("x = 1", RepairScenario::kSingleHunk).scenario,
            RepairScenario::kSingleHunk);
}

}  // namespace
}  // namespace convrepair
