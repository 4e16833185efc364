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

// Fine-tuning datasets built from (mutated) code pairs and the job
// description handed to the external LoRA trainer.

#ifndef FUTUR_DATASET_H_
#define FUTUR_DATASET_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "futur/pairs.h"

namespace futur::dataset {

struct GenerationRecord {
  std::string prompt;
  std::string response;
};

struct ConversionRecord {
  std::string problem;
  std::string seed;
  std::string solution;
};

struct BuildOptions {
  bool include_originals = true;
  uint64_t shuffle_seed = 0;
};

// Prompt id -> rendered prompt.
using PromptIndex = std::map<std::string, std::string>;

struct DatasetInput {
  std::vector<pairs::CodePair> originals;  // also resolves parents of mutants
  std::vector<pairs::MutatedPair> mutated;
};

std::vector<GenerationRecord> BuildGenerationDataset(const DatasetInput& input,
                                                     const PromptIndex& prompts,
                                                     const BuildOptions& options,
                                                     std::vector<std::string>* warnings = nullptr);

std::vector<ConversionRecord> BuildConversionDataset(const DatasetInput& input,
                                                     const std::string& target_library,
                                                     const BuildOptions& options);

// Deterministic Fisher-Yates driven by a 64-bit Mersenne Twister.
template <class T>
void ShuffleRecords(std::vector<T>& records, uint64_t seed);

std::string ToLine(const GenerationRecord& r);
std::string ToLine(const ConversionRecord& r);
void WriteGeneration(const fs::path& path, const std::vector<GenerationRecord>& records);
void WriteConversion(const fs::path& path, const std::vector<ConversionRecord>& records);
std::vector<GenerationRecord> ReadGeneration(const fs::path& path);
std::vector<ConversionRecord> ReadConversion(const fs::path& path);

struct FineTuneConfig {
  std::string base_model_id = "codellama/CodeLlama-7b-Instruct-hf";
  int quantization_bits = 4;
  int lora_rank = 8;
  double learning_rate = 3e-4;
  int max_steps = 400;
  double validation_fraction = 0.1;
  int validation_interval_steps = 20;
  std::vector<fs::path> dataset_paths;
  uint64_t shuffle_seed = 0;
  std::string combination = "both";  // generation | conversion | both
};

// Checks the invariants against the datasets on disk and writes key=value
// lines. Throws ConfigError (bad values) or IoError (dangling dataset path).
void EmitFinetuneConfig(const fs::path& path, const FineTuneConfig& config);
FineTuneConfig ReadFinetuneConfig(const fs::path& path);

}  // namespace futur::dataset

#endif  // FUTUR_DATASET_H_
