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

// Seed corpus: historical bug codes converted to the target library (pot)
// and freshly generated API-invoking programs (gen).

#ifndef FUTUR_SEEDS_H_
#define FUTUR_SEEDS_H_

#include <string>
#include <vector>

#include "futur/backend.h"
#include "futur/catalog.h"
#include "futur/corpus.h"

namespace futur::seeds {

enum class Kind { kPot, kGen };
std::string KindName(Kind k);
Kind KindFromName(const std::string& name);

struct SeedCode {
  std::string id;
  Kind kind = Kind::kGen;
  std::string origin;  // BugCode id (pot) or API name (gen)
  std::string target_library;
  std::string text;
  std::vector<std::string> target_apis;
  std::string paired_source;  // empty when absent
};

// Qualified target-library APIs called in `text` ("mx.eye" -> "mlx.core.eye").
// With a non-empty `known` list only those names are reported.
std::vector<std::string> DetectTargetApis(std::string_view text, const std::string& target_library,
                                          const std::vector<std::string>& known = {});

struct ConvertOptions {
  std::string target_library;
  double temperature = backend::kDefaultTemperature;
  int max_new_tokens = backend::kConversionMaxTokens;
  corpus::ImportTable imports = corpus::DefaultImportTable();
  std::vector<std::string> known_apis;
};

struct ConvertReport {
  size_t attempted = 0;
  size_t converted = 0;
  size_t backend_failures = 0;
  size_t unparseable = 0;
  std::vector<std::string> diagnostics;
};

std::vector<SeedCode> ConvertCorpus(const std::vector<corpus::BugCode>& corpus,
                                    backend::CodeModel& model, const ConvertOptions& options,
                                    ConvertReport* report = nullptr);

struct GenerateOptions {
  std::string target_library;
  size_t total = 0;
  int attempt_factor = 5;
  bool paired_source = true;
  std::string source_library = "pytorch";
  double temperature = backend::kDefaultTemperature;
  int max_new_tokens = backend::kGenerationMaxTokens;
  corpus::ImportTable imports = corpus::DefaultImportTable();
};

struct GenerateReport {
  size_t attempts = 0;
  size_t failures = 0;
  bool partial = false;
  std::vector<std::string> diagnostics;
};

// Round-robin over `apis` by success slot: the k-th produced seed targets
// apis[k % n]. Stops at `total` seeds or after attempt_factor * total tries.
std::vector<SeedCode> GenerateRandom(const std::vector<catalog::ApiInfo>& apis,
                                     backend::CodeModel& model, const GenerateOptions& options,
                                     GenerateReport* report = nullptr);

struct DedupEntry {
  std::string removed;
  std::string kept;
};

// Drops seeds whose normalized text was seen before; first occurrence wins.
std::vector<SeedCode> DedupeSeeds(const std::vector<SeedCode>& seeds,
                                  std::vector<DedupEntry>* ledger = nullptr);

// seeds/<library>/<kind>/<id>.<ext> (+ <id>.source.<ext>) and seeds/index.tsv.
void WriteSeedStore(const fs::path& root, const std::vector<SeedCode>& seeds,
                    const std::string& ext = "py");
std::vector<SeedCode> LoadSeedStore(const fs::path& root);
fs::path SeedPath(const fs::path& root, const SeedCode& seed, const std::string& ext = "py");
fs::path PairedSourcePath(const fs::path& root, const SeedCode& seed,
                          const std::string& ext = "py");

}  // namespace futur::seeds

#endif  // FUTUR_SEEDS_H_
