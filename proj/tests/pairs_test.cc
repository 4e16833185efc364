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

#include "futur/pairs.h"

#include <gtest/gtest.h>

#include <map>

#include "futur/pysyntax.h"
#include "test_fixtures.h"

namespace futur::pairs {
namespace {

CodePair Pair(std::string s, std::string t) {
  CodePair p;
  p.api = "mlx.core.eye";
  p.library = "mlx";
  p.source_code = std::move(s);
  p.target_code = std::move(t);
  p.prompt_ref = "mlx.core.eye#0";
  return p;
}

const char* kS = "import torch\nx = torch.eye(3, 4)\nprint(x)\n";
const char* kT = "import mlx.core as mx\nx = mx.eye(3, 4)\nprint(x)\n";

TEST(ValidateTest, Reasons) {
  EXPECT_EQ(ValidatePair(Pair(kS, kT), "pytorch", "mlx"), Verdict::kAccept);
  EXPECT_EQ(ValidatePair(Pair("x = (", kT), "pytorch", "mlx"), Verdict::kParseFailS);
  EXPECT_EQ(ValidatePair(Pair(kS, "x = ("), "pytorch", "mlx"), Verdict::kParseFailT);
  EXPECT_EQ(ValidatePair(Pair(kS, std::string(kT) + "import torch\n"), "pytorch", "mlx"),
            Verdict::kCrossContamination);
  EXPECT_EQ(ValidatePair(Pair("import numpy as np\nnp.eye(3)\n", kT), "pytorch", "mlx"),
            Verdict::kWrongLibrary);
  EXPECT_EQ(ValidatePair(Pair(kS, "print(1)\n"), "pytorch", "mlx"), Verdict::kWrongLibrary);
  EXPECT_EQ(VerdictName(Verdict::kParseFailS), "parse_fail_S");
  EXPECT_EQ(VerdictName(Verdict::kCrossContamination), "cross_contamination");
}

TEST(SplitTest, FencedSourceAndTarget) {
  auto s = SplitCompletion("Sure.\n```source\na = 1\n```\ntext\n```target\nb = 2\n```\n");
  ASSERT_TRUE(s);
  EXPECT_EQ(s->first, "a = 1\n");
  EXPECT_EQ(s->second, "b = 2\n");
  EXPECT_FALSE(SplitCompletion("```source\na\n```\n```python\nb\n```\n"));
  EXPECT_FALSE(SplitCompletion("just words"));
}

std::vector<prompt::Prompt> Prompts(int n) {
  std::vector<prompt::Prompt> out;
  for (int i = 0; i < n; ++i) {
    prompt::Prompt p;
    p.api = "mlx.core.eye";
    p.library = "mlx";
    p.task_text = "task for eye";
    p.example = "mx.eye(" + std::to_string(i) + ")\n";
    p.index_within_api = i;
    out.push_back(p);
  }
  return out;
}

TEST(GenerateTest, CooperativeMockFillsTheLimit) {
  backend::MockRulebook book = backend::MockRulebook::Parse(
      std::string("task for eye >>>\n```source\n") + kS + "```\n```target\n" + kT + "```\n");
  GenerateResult r = GeneratePairs(Prompts(2), book, {});
  ASSERT_EQ(r.pairs.size(), 5u);
  EXPECT_EQ(r.failures, 0);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(r.pairs[i].pair_index, i);
    EXPECT_EQ(r.pairs[i].prompt_ref, "mlx.core.eye#" + std::to_string(i % 2));
    EXPECT_EQ(r.pairs[i].target_code, kT);
    EXPECT_TRUE(py::Parses(r.pairs[i].source_code));
  }
}

TEST(GenerateTest, GarbageExhaustsTheBudget) {
  backend::MockRulebook book = backend::MockRulebook::Parse("task >>> no fences at all\n");
  GenerateResult r = GeneratePairs(Prompts(1), book, {});
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_EQ(r.failures, 15);
  EXPECT_EQ(r.attempts, 15);
  backend::MockRulebook empty = backend::MockRulebook::Parse("");
  GenerateResult miss = GeneratePairs(Prompts(1), empty, {});
  EXPECT_EQ(miss.failures, 15);
  EXPECT_NE(miss.diagnostics[0].find("mock_miss"), std::string::npos);
}

TEST(StorageTest, PairFileRoundTrip) {
  futur::testing::TempDir dir;
  CodePair p = Pair(kS, kT);
  p.pair_index = 3;
  WriteFile(PairPath(dir.path(), p), FormatPair(p));
  EXPECT_EQ(PairPath(dir.path(), p), dir / "mlx/mlx_core_eye/3.pair");
  auto loaded = LoadPairs(dir.path(), "mlx");
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded[0].source_code, kS);
  EXPECT_EQ(loaded[0].target_code, kT);
  EXPECT_EQ(loaded[0].prompt_ref, "mlx.core.eye#0");
  EXPECT_EQ(loaded[0].pair_index, 3);
  EXPECT_THROW(ParsePairFile("# api: x\n"), ParseError);
}

TEST(MutateTest, SharedLiteralsMoveTogether) {
  CodePair p = Pair(
      "import torch\nx = torch.full((2, 3), 1.5)\ny = torch.eye(4)\n",
      "import mlx.core as mx\nx = mx.full((2, 3), 1.5)\nz = mx.eye(7)\n");
  auto units = MutableLiterals(p);
  // 2, 3 and 1.5 are shared; 4 and 7 differ in value and stay independent
  ASSERT_EQ(units.size(), 5u);
  std::map<std::string, size_t> sizes;
  for (auto& u : units) sizes[u.sites[0].text] = u.sites.size();
  EXPECT_EQ(sizes["1.5"], 2u);
  EXPECT_EQ(sizes["2"], 2u);
  EXPECT_EQ(sizes["4"], 1u);
  EXPECT_EQ(sizes["7"], 1u);
  for (const MutatedPair& mp : MutatePair(p, 200, 9)) {
    std::map<std::string, std::string> s_new;
    std::map<std::string, std::string> t_new;
    for (const Edit& e : mp.edits) (e.side == 'S' ? s_new : t_new)[e.old_value] = e.new_value;
    for (const char* shared : {"2", "3", "1.5"}) {
      EXPECT_EQ(s_new.count(shared), t_new.count(shared));
      if (s_new.count(shared)) EXPECT_EQ(s_new[shared], t_new[shared]);
    }
  }
}

TEST(MutateTest, CountDeterminismAndParseability) {
  CodePair p = Pair("import torch\nx = torch.tensor([1.0, -2.5, 3.0])\ntorch.cumsum(x, 0)\n",
                    "import mlx.core as mx\nx = mx.array([1.0, -2.5, 3.0])\nmx.cumsum(x, 0)\n");
  auto a = MutatePair(p, 100, 42);
  auto b = MutatePair(p, 100, 42);
  ASSERT_EQ(a.size(), 100u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(EditSummary(a[i].edits), EditSummary(b[i].edits));
    EXPECT_EQ(a[i].target_code, b[i].target_code);
    EXPECT_FALSE(a[i].edits.empty());
    EXPECT_TRUE(py::Parses(a[i].source_code)) << a[i].source_code;
    EXPECT_TRUE(py::Parses(a[i].target_code)) << a[i].target_code;
  }
  EXPECT_NE(EditSummary(MutatePair(p, 1, 43)[0].edits), EditSummary(a[0].edits));
}

TEST(MutateTest, NoLiteralsGivesUnmutatedCopies) {
  CodePair p = Pair("import torch\nx = torch.eye(n)\n", "import mlx.core as mx\nx = mx.eye(n)\n");
  auto v = MutatePair(p, 7, 1);
  ASSERT_EQ(v.size(), 7u);
  for (auto& mp : v) {
    EXPECT_TRUE(mp.unmutated);
    EXPECT_EQ(mp.target_code, p.target_code);
  }
  EXPECT_THROW(MutatePair(p, 0, 1), ConfigError);
}

TEST(MutateTest, IntegerLiteralsStayIntegral) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    std::string v = DrawValue(false, rng);
    EXPECT_EQ(v.find_first_of(".en"), std::string::npos) << v;
    std::string f = DrawValue(true, rng);
    bool is_int = false;
    ASSERT_TRUE(py::EvalNumeric(f, &is_int).has_value()) << f;
    EXPECT_FALSE(is_int) << f;
  }
}

TEST(MutateTest, NegativeValuesAreParenthesizedInsideExpressions) {
  CodePair p = Pair("import torch\ntorch.eye(2 ** 3)\n", "import mlx.core as mx\nmx.eye(2 ** 3)\n");
  for (const MutatedPair& mp : MutatePair(p, 300, 77)) {
    for (const Edit& e : mp.edits) {
      if (e.new_value[0] == '-') ADD_FAILURE() << e.new_value;
    }
    EXPECT_TRUE(py::Parses(mp.target_code));
  }
}

TEST(MutateTest, LineRoundTrip) {
  CodePair p = Pair(kS, kT);
  for (const MutatedPair& mp : MutatePair(p, 5, 3)) {
    MutatedPair back = MutatedFromLine(MutatedToLine(mp));
    EXPECT_EQ(MutatedToLine(back), MutatedToLine(mp));
  }
}

}  // namespace
}  // namespace futur::pairs
