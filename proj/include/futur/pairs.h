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

// Source/target code pairs: generation from prompts, validation, storage and
// numeric-literal mutation.

#ifndef FUTUR_PAIRS_H_
#define FUTUR_PAIRS_H_

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "futur/backend.h"
#include "futur/prompt.h"

namespace futur::pairs {

struct CodePair {
  std::string api;
  std::string library;  // target library id
  std::string source_code;
  std::string target_code;
  std::string prompt_ref;  // Prompt::Id()
  int pair_index = 0;

  std::string Id() const { return api + "#" + std::to_string(pair_index); }
};

// Module roots that identify a library in import statements
// ("pytorch" -> {"torch"}); unknown ids map to themselves.
std::set<std::string> LibraryRoots(const std::string& library);

// Top-level module names a program imports or references directly.
std::set<std::string> ReferencedRoots(std::string_view code);

enum class Verdict { kAccept, kParseFailS, kParseFailT, kWrongLibrary, kCrossContamination };
std::string VerdictName(Verdict v);

Verdict ValidatePair(const CodePair& pair, const std::string& source_library,
                     const std::string& target_library);

// Bodies of the ```source and ```target fences; nullopt when either is missing.
std::optional<std::pair<std::string, std::string>> SplitCompletion(std::string_view completion);

struct GenerateOptions {
  int per_api_limit = 5;
  int retry_factor = 3;  // attempts = retry_factor * per_api_limit
  std::string source_library = "pytorch";
  double temperature = backend::kDefaultTemperature;
  int max_new_tokens = backend::kGenerationMaxTokens;
};

struct GenerateResult {
  std::vector<CodePair> pairs;
  int attempts = 0;
  int failures = 0;
  std::vector<std::string> diagnostics;  // one per failure
};

// Queries the model with the API's prompts in turn until `per_api_limit`
// valid pairs exist or the attempt budget is spent.
GenerateResult GeneratePairs(const std::vector<prompt::Prompt>& api_prompts,
                             backend::CodeModel& model, const GenerateOptions& options);

// pairs/<library>/<api>/<pair_index>.pair
fs::path PairPath(const fs::path& root, const CodePair& pair);
std::string FormatPair(const CodePair& pair);
CodePair ParsePairFile(std::string_view text, const std::string& origin = "<memory>");
std::vector<CodePair> LoadPairs(const fs::path& root, const std::string& library);

// ---- mutation ---------------------------------------------------------------

struct Edit {
  char side = 'S';    // 'S' or 'T'
  size_t position = 0;  // byte offset of the replaced literal in the parent side
  std::string old_value;
  std::string new_value;
};

struct MutatedPair {
  std::string parent;  // CodePair::Id()
  std::string api;
  std::string library;
  int mutation_index = 0;
  uint64_t rng_seed = 0;
  bool unmutated = false;
  std::vector<Edit> edits;
  std::string source_code;
  std::string target_code;
};

// A mutable literal group: one literal, or an S literal and a T literal
// that share value and argument position and therefore change together.
struct LiteralUnit {
  struct Site {
    char side;
    size_t begin;
    size_t end;
    std::string text;
  };
  std::vector<Site> sites;
  bool is_float = false;
};

std::vector<LiteralUnit> MutableLiterals(const CodePair& pair);

// Replacement text for one unit drawn from the mutation mixture.
std::string DrawValue(bool is_float, std::mt19937_64& rng);

std::vector<MutatedPair> MutatePair(const CodePair& pair, int m, uint64_t rng_seed);

std::string EditSummary(const std::vector<Edit>& edits);

// Mutated pairs as one JSON object per line.
std::string MutatedToLine(const MutatedPair& mp);
MutatedPair MutatedFromLine(std::string_view line);

}  // namespace futur::pairs

#endif  // FUTUR_PAIRS_H_
