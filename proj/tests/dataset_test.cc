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

#include "futur/dataset.h"

#include <gtest/gtest.h>

#include <algorithm>

#include "test_fixtures.h"

namespace futur::dataset {
namespace {

using futur::testing::TempDir;

DatasetInput Input(int apis, int n, int m) {
  DatasetInput in;
  for (int a = 0; a < apis; ++a) {
    for (int i = 0; i < n; ++i) {
      pairs::CodePair p;
      p.api = "mlx.core.f" + std::to_string(a);
      p.library = "mlx";
      p.pair_index = i;
      p.prompt_ref = p.api + "#0";
      p.source_code = "import torch\ntorch.f" + std::to_string(a) + "(" + std::to_string(i) + ")\n";
      p.target_code = "import mlx.core as mx\nmx.f" + std::to_string(a) + "(" + std::to_string(i) + ")\n";
      in.originals.push_back(p);
      if (m > 0) {
        auto v = pairs::MutatePair(p, m, 1000 + a * 10 + i);
        in.mutated.insert(in.mutated.end(), v.begin(), v.end());
      }
    }
  }
  return in;
}

PromptIndex Prompts(int apis) {
  PromptIndex idx;
  for (int a = 0; a < apis; ++a) {
    std::string api = "mlx.core.f" + std::to_string(a);
    idx[api + "#0"] = "prompt for " + api + "\n";
  }
  return idx;
}

TEST(DatasetTest, CountsFollowInclusionPolicy) {
  DatasetInput in = Input(3, 5, 100);
  BuildOptions with;
  auto gen = BuildGenerationDataset(in, Prompts(3), with);
  auto conv = BuildConversionDataset(in, "mlx", with);
  EXPECT_EQ(gen.size(), 3u * 5 * (100 + 1));
  EXPECT_EQ(conv.size(), gen.size());
  BuildOptions without;
  without.include_originals = false;
  EXPECT_EQ(BuildGenerationDataset(in, Prompts(3), without).size(), 3u * 5 * 100);
  EXPECT_EQ(BuildConversionDataset(in, "mlx", without).size(), 3u * 5 * 100);
}

TEST(DatasetTest, ConversionRecordFields) {
  DatasetInput in = Input(1, 1, 0);
  auto conv = BuildConversionDataset(in, "mlx", {});
  ASSERT_EQ(conv.size(), 1u);
  EXPECT_EQ(conv[0].problem, "Convert this code to code that uses the target library (MLX)");
  EXPECT_EQ(conv[0].seed, in.originals[0].source_code);
  EXPECT_EQ(conv[0].solution, in.originals[0].target_code);
  auto gen = BuildGenerationDataset(in, Prompts(1), {});
  ASSERT_EQ(gen.size(), 1u);
  EXPECT_EQ(gen[0].response, in.originals[0].target_code);
  EXPECT_EQ(gen[0].prompt, "prompt for mlx.core.f0\n");
}

TEST(DatasetTest, EmptyInputGivesEmptyFiles) {
  TempDir dir;
  DatasetInput in;
  WriteGeneration(dir / "g.ndrec", BuildGenerationDataset(in, {}, {}));
  WriteConversion(dir / "c.ndrec", BuildConversionDataset(in, "mlx", {}));
  EXPECT_EQ(ReadFile(dir / "g.ndrec"), "");
  EXPECT_EQ(ReadFile(dir / "c.ndrec"), "");
}

TEST(DatasetTest, MissingPromptSkipsWithWarning) {
  DatasetInput in = Input(2, 1, 3);
  PromptIndex only_first = Prompts(1);
  std::vector<std::string> warnings;
  auto gen = BuildGenerationDataset(in, only_first, {}, &warnings);
  EXPECT_EQ(gen.size(), 4u);
  EXPECT_EQ(warnings.size(), 4u);
}

TEST(DatasetTest, RoundTripIsByteExactAndShuffleDeterministic) {
  TempDir dir;
  DatasetInput in = Input(3, 2, 4);
  in.originals[0].target_code = "print('tab\\there', \"q\")\n# ü non-ascii\n";
  BuildOptions o;
  o.shuffle_seed = 99;
  auto gen = BuildGenerationDataset(in, Prompts(3), o);
  auto conv = BuildConversionDataset(in, "mlx", o);
  WriteGeneration(dir / "g.ndrec", gen);
  WriteConversion(dir / "c.ndrec", conv);
  auto g2 = ReadGeneration(dir / "g.ndrec");
  auto c2 = ReadConversion(dir / "c.ndrec");
  ASSERT_EQ(g2.size(), gen.size());
  for (size_t i = 0; i < gen.size(); ++i) {
    EXPECT_EQ(g2[i].prompt, gen[i].prompt);
    EXPECT_EQ(g2[i].response, gen[i].response);
    EXPECT_EQ(c2[i].seed, conv[i].seed);
  }
  WriteGeneration(dir / "g2.ndrec", g2);
  EXPECT_EQ(ReadFile(dir / "g.ndrec"), ReadFile(dir / "g2.ndrec"));
  auto again = BuildGenerationDataset(in, Prompts(3), o);
  for (size_t i = 0; i < gen.size(); ++i) EXPECT_EQ(again[i].response, gen[i].response);
  o.shuffle_seed = 100;
  auto other = BuildGenerationDataset(in, Prompts(3), o);
  bool differs = false;
  for (size_t i = 0; i < gen.size(); ++i) differs |= other[i].response != gen[i].response;
  EXPECT_TRUE(differs);
  WriteFile(dir / "bad.ndrec", "{\"prompt\": \"x\"}\n");
  EXPECT_THROW(ReadGeneration(dir / "bad.ndrec"), ParseError);
}

TEST(FinetuneTest, DefaultsAndValidation) {
  TempDir dir;
  std::string lines;
  for (int i = 0; i < 20; ++i) lines += "{}\n";
  WriteFile(dir / "g.ndrec", lines);
  FineTuneConfig c;
  c.dataset_paths = {dir / "g.ndrec"};
  EmitFinetuneConfig(dir / "finetune.cfg", c);
  FineTuneConfig back = ReadFinetuneConfig(dir / "finetune.cfg");
  EXPECT_EQ(back.learning_rate, 3e-4);
  EXPECT_EQ(back.max_steps, 400);
  EXPECT_EQ(back.quantization_bits, 4);
  EXPECT_EQ(back.validation_fraction, 0.1);
  EXPECT_EQ(back.validation_interval_steps, 20);
  EXPECT_EQ(back.lora_rank, 8);
  ASSERT_EQ(back.dataset_paths.size(), 1u);

  c.lora_rank = 16;
  EmitFinetuneConfig(dir / "r16.cfg", c);
  EXPECT_EQ(ReadFinetuneConfig(dir / "r16.cfg").lora_rank, 16);

  FineTuneConfig zero = c;
  zero.validation_fraction = 0;
  EXPECT_THROW(EmitFinetuneConfig(dir / "x.cfg", zero), ConfigError);
  FineTuneConfig tiny = c;
  tiny.validation_fraction = 0.04;  // 0.04 * 20 < 1
  EXPECT_THROW(EmitFinetuneConfig(dir / "x.cfg", tiny), ConfigError);
  FineTuneConfig dangling = c;
  dangling.dataset_paths = {dir / "missing.ndrec"};
  EXPECT_THROW(EmitFinetuneConfig(dir / "x.cfg", dangling), IoError);
  EXPECT_FALSE(fs::exists(dir / "x.cfg"));
}

}  // namespace
}  // namespace futur::dataset
