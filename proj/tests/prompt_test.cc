// Copyright 2026 The Futur Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "futur/prompt.h"

#include <gtest/gtest.h>

#include <random>

#include "futur/pysyntax.h"
#include "test_fixtures.h"

namespace futur::prompt {
namespace {

catalog::ApiInfo Api(std::string doc, std::vector<std::string> examples) {
  catalog::ApiInfo a;
  a.name = "mlx.core.eye";
  a.target_library = "mlx";
  a.doc = std::move(doc);
  a.examples = std::move(examples);
  return a;
}

TEST(CountTest, CallSitesOnly) {
  EXPECT_EQ(CountApiOccurrences("mx.eye(3)", "eye"), 1);
  EXPECT_EQ(CountApiOccurrences("a = mx.eye(3)\nb = mx.eye(4, k=1)\n", "mlx.core.eye"), 2);
  EXPECT_EQ(CountApiOccurrences("eyeball(3)", "eye"), 0);
  EXPECT_EQ(CountApiOccurrences("x = mx.eye\nprint('eye(2)')\n", "eye"), 0);
  EXPECT_EQ(CountApiOccurrences("mx.eye (3) +", "eye"), 1);  // regex fallback
  EXPECT_EQ(CountApiOccurrences("x = my_eye(3) + eye (2) +", "eye"), 1);
}

TEST(DecomposeTest, SingleUseIsIdentity) {
  Decomposition d = DecomposeExample("import mlx.core as mx\nx = mx.eye(3)\n", "eye");
  ASSERT_EQ(d.snippets.size(), 1u);
  EXPECT_EQ(d.snippets[0], "import mlx.core as mx\nx = mx.eye(3)\n");
  EXPECT_FALSE(d.undecomposed);
}

TEST(DecomposeTest, EachCallKeepsItsOwnProducer) {
  Decomposition d = DecomposeExample("a = make(); f(a); b = make2(); f(b)", "f");
  ASSERT_EQ(d.snippets.size(), 2u);
  EXPECT_EQ(d.snippets[0], "a = make()\nf(a)\n");
  EXPECT_EQ(d.snippets[1], "b = make2()\nf(b)\n");
}

TEST(DecomposeTest, SharedProducerIsDuplicated) {
  std::string src =
      "import mlx.core as mx\nn = 3\nx = mx.ones((n,))\nprint(x)\ny = mx.sum(x)\n"
      "z = mx.sum(x, axis=0)\n";
  Decomposition d = DecomposeExample(src, "mlx.core.sum");
  ASSERT_EQ(d.snippets.size(), 2u);
  EXPECT_EQ(d.snippets[0], "import mlx.core as mx\nn = 3\nx = mx.ones((n,))\ny = mx.sum(x)\n");
  EXPECT_EQ(d.snippets[1],
            "import mlx.core as mx\nn = 3\nx = mx.ones((n,))\nz = mx.sum(x, axis=0)\n");
}

TEST(DecomposeTest, RebindingCutsTheSlice) {
  std::string src = "a = 1\na = 2\nf(a)\nb = g(a)\na[0] = 5\nf(b)\n";
  Decomposition d = DecomposeExample(src, "f");
  ASSERT_EQ(d.snippets.size(), 2u);
  EXPECT_EQ(d.snippets[0], "a = 2\nf(a)\n");
  EXPECT_EQ(d.snippets[1], "a = 2\nb = g(a)\nf(b)\n");
}

TEST(DecomposeTest, FallbacksAreFlagged) {
  Decomposition shared = DecomposeExample("x = f(1) + f(2)\n", "f");
  EXPECT_TRUE(shared.undecomposed);
  ASSERT_EQ(shared.snippets.size(), 1u);
  Decomposition dependent = DecomposeExample("a = f(1)\nb = f(a)\n", "f");
  EXPECT_TRUE(dependent.undecomposed);
  Decomposition broken = DecomposeExample("f(1)\nf(2\n", "f");
  EXPECT_TRUE(broken.undecomposed);
  EXPECT_EQ(broken.snippets[0], "f(1)\nf(2\n");
}

const char* kLongDoc =
    "Create an identity matrix or a general diagonal matrix.\n"
    "\n"
    "The diagonal can be shifted with the k argument, producing ones above or below.\n"
    "\n"
    "Args:\n"
    "    n (int): Number of rows.\n"
    "    m (int, optional): Number of columns.\n"
    "\n"
    "Returns:\n"
    "    array: An array where all elements are zero except the k-th diagonal.\n"
    "\n"
    "Example:\n"
    "    >>> mx.eye(2)\n"
    "\n"
    "    >>> mx.eye(2, 3, k=1)\n"
    "\n"
    "Notes:\n"
    "    This function historically accepted negative sizes and silently returned an empty\n"
    "    array; that behaviour changed in a later release and now raises instead. Large\n"
    "    sizes allocate eagerly, so be careful on accelerators with limited memory.\n";

TEST(TrimDocTest, UnderBudgetIsUnchanged) {
  EXPECT_EQ(TrimDoc(kLongDoc, 10000), kLongDoc);
}

TEST(TrimDocTest, NotesGoFirst) {
  std::string doc = kLongDoc;
  size_t full = EstimateTokens(doc);
  size_t notes = EstimateTokens(doc.substr(doc.find("\nNotes:")));
  std::string trimmed = TrimDoc(doc, full - notes + 1);
  EXPECT_EQ(trimmed.find("Notes"), std::string::npos);
  EXPECT_NE(trimmed.find("diagonal can be shifted"), std::string::npos);
  EXPECT_NE(trimmed.find("Args:"), std::string::npos);
  EXPECT_NE(trimmed.find("mx.eye(2, 3, k=1)"), std::string::npos);
  EXPECT_LE(EstimateTokens(trimmed), full - notes + 1);
}

TEST(TrimDocTest, PriorityOrderUnderShrinkingBudgets) {
  const std::string summary = "Create an identity matrix or a general diagonal matrix.\n";
  const std::string args =
      "Args:\n    n (int): Number of rows.\n    m (int, optional): Number of columns.\n";
  const std::string returns =
      "Returns:\n    array: An array where all elements are zero except the k-th diagonal.\n";
  const std::string stages[] = {
      summary + args + "\n" + returns + "\nExample:\n    >>> mx.eye(2)\n\n    >>> mx.eye(2, 3, k=1)",
      summary + args + "\n" + returns + "\nExample:\n    >>> mx.eye(2)",
      summary + args + "\n" + returns.substr(0, returns.size() - 1),
      summary + args.substr(0, args.size() - 1),
  };
  for (const std::string& s : stages) EXPECT_EQ(TrimDoc(kLongDoc, EstimateTokens(s)), s);
  EXPECT_EQ(TrimDoc(kLongDoc, 1), "Crea");
  for (size_t b = 1; b < 200; ++b) EXPECT_LE(EstimateTokens(TrimDoc(kLongDoc, b)), b);
}

TEST(TemplateTest, ParseAndDefaults) {
  PromptTemplate t = PromptTemplate::Parse(
      "Test {api_name} of {target_library} vs {source_library}.\n[EMPHASIS]\nUse NaN.\n\nCrash "
      "it.\n");
  EXPECT_EQ(t.emphasis_clauses.size(), 2u);
  EXPECT_EQ(t.RenderTask("mlx.core.eye", "PyTorch", "MLX", true),
            "Test mlx.core.eye of MLX vs PyTorch.\n- Use NaN.\n- Crash it.");
  PromptTemplate d = PromptTemplate::Default();
  ASSERT_EQ(d.emphasis_clauses.size(), 3u);
  EXPECT_NE(d.emphasis_clauses[0].find("NaNs and Infs"), std::string::npos);
  EXPECT_NE(d.emphasis_clauses[1].find("edge cases"), std::string::npos);
  EXPECT_NE(d.emphasis_clauses[2].find("error checking"), std::string::npos);
  EXPECT_THROW(PromptTemplate::Parse("[EMPHASIS]\nx\n"), ConfigError);
}

TEST(BuildTest, PromptCountsFollowDecomposition) {
  PromptTemplate t = PromptTemplate::Default();
  BuildOptions o;
  auto one = BuildPrompts(Api("Identity.", {"x = mx.eye(3)\n"}), t, o);
  EXPECT_EQ(one.prompts.size(), 1u);
  auto three = BuildPrompts(
      Api("Identity.", {"import mlx.core as mx\na = mx.eye(3)\nb = mx.eye(2, k=1)\nc = mx.eye(0)\n"}),
      t, o);
  ASSERT_EQ(three.prompts.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(three.prompts[i].index_within_api, i);
    EXPECT_EQ(CountApiOccurrences(three.prompts[i].example, "eye"), 1);
  }
  auto none = BuildPrompts(Api("Identity.", {}), t, o);
  ASSERT_EQ(none.prompts.size(), 1u);
  EXPECT_NE(none.prompts[0].Render().find("[CODE EXAMPLE]\nnone available"), std::string::npos);
  catalog::ApiInfo undoc = Api("", {});
  undoc.undocumented = true;
  auto skipped = BuildPrompts(undoc, t, o);
  EXPECT_TRUE(skipped.prompts.empty());
  ASSERT_EQ(skipped.skipped.size(), 1u);
}

TEST(BuildTest, RenderedPromptHasThreePartsAndFormat) {
  auto r = BuildPrompts(Api("Identity.", {"x = mx.eye(3)\n"}), PromptTemplate::Default(), {});
  std::string text = r.prompts[0].Render();
  EXPECT_NE(text.find("`mlx.core.eye`"), std::string::npos);
  EXPECT_NE(text.find("MLX"), std::string::npos);
  EXPECT_NE(text.find("PyTorch"), std::string::npos);
  EXPECT_NE(text.find("[API DOCUMENTATION]\nIdentity."), std::string::npos);
  EXPECT_NE(text.find("```source"), std::string::npos);
  EXPECT_NE(text.find("```target"), std::string::npos);
}

TEST(BuildTest, BudgetHoldsForRandomBudgets) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<size_t> budget(64, 700);
  PromptTemplate t = PromptTemplate::Default();
  catalog::ApiInfo api =
      Api(kLongDoc, {"import mlx.core as mx\na = mx.eye(3)\nb = mx.eye(4)\n", "mx.eye(1)\n"});
  size_t emitted = 0;
  for (int i = 0; i < 300; ++i) {
    BuildOptions o;
    o.budget = budget(rng);
    auto r = BuildPrompts(api, t, o);
    EXPECT_EQ(r.prompts.size() + r.skipped.size(), 3u);
    for (const Prompt& p : r.prompts) {
      EXPECT_LE(EstimateTokens(p.Render()), o.budget);
      ++emitted;
    }
  }
  EXPECT_GT(emitted, 0u);
}

TEST(BuildTest, WritesOneFilePerPrompt) {
  futur::testing::TempDir dir;
  auto r = BuildPrompts(Api("d", {"a = mx.eye(1)\nb = mx.eye(2)\n"}), PromptTemplate::Default(), {});
  auto paths = WritePrompts(dir.path(), r.prompts);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[1], dir / "mlx/mlx_core_eye/1.txt");
  EXPECT_EQ(ReadFile(paths[1]), r.prompts[1].Render());
}

}  // namespace
}  // namespace futur::prompt
