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

// Three-part pair-generation prompts: task text, trimmed API documentation
// and a single-usage code example.

#ifndef FUTUR_PROMPT_H_
#define FUTUR_PROMPT_H_

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "futur/catalog.h"

namespace futur::prompt {

using TokenEstimator = std::function<size_t(std::string_view)>;

// ceil(bytes / 4).
size_t EstimateTokens(std::string_view text);

// Pretty library name used in prompt and dataset wording ("mlx" -> "MLX").
std::string LibraryDisplayName(const std::string& id);

struct PromptTemplate {
  // Placeholders: {api_name}, {source_library}, {target_library}.
  std::string task_section;
  std::vector<std::string> emphasis_clauses;

  static PromptTemplate Default();
  // Task text, then an `[EMPHASIS]` line followed by one clause per line.
  static PromptTemplate Parse(std::string_view text);
  static PromptTemplate Load(const fs::path& path);

  std::string RenderTask(const std::string& api_name, const std::string& source_library,
                         const std::string& target_library, bool with_emphasis) const;
};

struct Prompt {
  std::string api;
  std::string library;  // target library id
  std::string task_text;
  std::string doc_excerpt;
  std::string example;
  std::string output_format;
  size_t token_budget = 0;
  int index_within_api = 0;
  bool undecomposed = false;

  std::string Render() const;
  std::string Id() const { return api + "#" + std::to_string(index_within_api); }
};

// Number of call sites whose callee ends in the terminal component of
// `api_name`. Unparseable examples fall back to a word-boundary regex.
int CountApiOccurrences(std::string_view example, std::string_view api_name);

struct Decomposition {
  std::vector<std::string> snippets;
  bool undecomposed = false;
  std::string diagnostic;
};

// One snippet per call site: the backward slice of top-level statements the
// call depends on plus the call statement itself. Falls back to the whole
// example (flagged) when the example does not parse, when two call sites
// share a statement, or when a slice would pull in another call site.
Decomposition DecomposeExample(std::string_view example, std::string_view api_name);

// Shrinks documentation to `budget` tokens, dropping notes/see-also/changelog
// sections first, then free description, then all but the first example,
// the examples, the return description and the parameter list, and finally
// truncating the summary line.
std::string TrimDoc(std::string_view doc, size_t budget,
                    const TokenEstimator& estimate = EstimateTokens);

struct BuildOptions {
  size_t budget = 2048;
  std::string source_library = "pytorch";
  TokenEstimator estimate = EstimateTokens;
};

struct BuildResult {
  std::vector<Prompt> prompts;
  std::vector<std::string> skipped;  // "api: reason"
};

BuildResult BuildPrompts(const catalog::ApiInfo& api, const PromptTemplate& tmpl,
                         const BuildOptions& options);

// prompts/<library>/<api>/<index>.txt under `root`; returns the written paths.
std::vector<fs::path> WritePrompts(const fs::path& root, const std::vector<Prompt>& prompts);

}  // namespace futur::prompt

#endif  // FUTUR_PROMPT_H_
