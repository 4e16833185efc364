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

#include <random>

#include "futur/backend.h"
#include "futur/prompt.h"
#include "json.hpp"

namespace futur::dataset {

using ojson = nlohmann::ordered_json;

template <class T>
void ShuffleRecords(std::vector<T>& records, uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (size_t i = records.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng() % i);
    std::swap(records[i - 1], records[j]);
  }
}

template void ShuffleRecords(std::vector<GenerationRecord>&, uint64_t);
template void ShuffleRecords(std::vector<ConversionRecord>&, uint64_t);

namespace {

// (prompt_ref, source, target) of every record in input order.
struct Row {
  std::string parent;
  std::string source;
  std::string target;
};

std::vector<Row> Rows(const DatasetInput& input, const BuildOptions& options) {
  std::vector<Row> rows;
  if (options.include_originals) {
    for (const pairs::CodePair& p : input.originals) {
      rows.push_back({p.Id(), p.source_code, p.target_code});
    }
  }
  for (const pairs::MutatedPair& m : input.mutated) {
    rows.push_back({m.parent, m.source_code, m.target_code});
  }
  return rows;
}

}  // namespace

std::vector<GenerationRecord> BuildGenerationDataset(const DatasetInput& input,
                                                     const PromptIndex& prompts,
                                                     const BuildOptions& options,
                                                     std::vector<std::string>* warnings) {
  std::map<std::string, std::string> prompt_of_pair;
  for (const pairs::CodePair& p : input.originals) prompt_of_pair[p.Id()] = p.prompt_ref;
  std::vector<GenerationRecord> out;
  for (const Row& r : Rows(input, options)) {
    auto ref = prompt_of_pair.find(r.parent);
    auto text = ref == prompt_of_pair.end() ? prompts.end() : prompts.find(ref->second);
    if (text == prompts.end()) {
      if (warnings) warnings->push_back("no prompt for pair " + r.parent + ", record skipped");
      continue;
    }
    out.push_back({text->second, r.target});
  }
  ShuffleRecords(out, options.shuffle_seed);
  return out;
}

std::vector<ConversionRecord> BuildConversionDataset(const DatasetInput& input,
                                                     const std::string& target_library,
                                                     const BuildOptions& options) {
  std::string problem = backend::ConversionProblem(prompt::LibraryDisplayName(target_library));
  std::vector<ConversionRecord> out;
  for (const Row& r : Rows(input, options)) out.push_back({problem, r.source, r.target});
  ShuffleRecords(out, options.shuffle_seed);
  return out;
}

std::string ToLine(const GenerationRecord& r) {
  ojson j;
  j["prompt"] = r.prompt;
  j["response"] = r.response;
  return j.dump();
}

std::string ToLine(const ConversionRecord& r) {
  ojson j;
  j["problem"] = r.problem;
  j["seed"] = r.seed;
  j["solution"] = r.solution;
  return j.dump();
}

namespace {

template <class T>
void WriteLines(const fs::path& path, const std::vector<T>& records) {
  std::string out;
  for (const T& r : records) out += ToLine(r) + "\n";
  WriteFileAtomic(path, out);
}

ojson ParseRecord(const fs::path& path, size_t line_no, const std::string& line,
                  std::initializer_list<const char*> keys) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const ojson::parse_error& e) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
  if (!j.is_object() || j.size() != keys.size()) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": unexpected fields");
  }
  for (const char* k : keys) {
    if (!j.contains(k) || !j[k].is_string()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": missing " + k);
    }
  }
  return j;
}

}  // namespace

void WriteGeneration(const fs::path& path, const std::vector<GenerationRecord>& records) {
  WriteLines(path, records);
}

void WriteConversion(const fs::path& path, const std::vector<ConversionRecord>& records) {
  WriteLines(path, records);
}

std::vector<GenerationRecord> ReadGeneration(const fs::path& path) {
  std::vector<GenerationRecord> out;
  size_t n = 0;
  for (const std::string& line : SplitLines(ReadFile(path))) {
    ++n;
    if (line.empty()) continue;
    ojson j = ParseRecord(path, n, line, {"prompt", "response"});
    out.push_back({j["prompt"].get<std::string>(), j["response"].get<std::string>()});
  }
  return out;
}

std::vector<ConversionRecord> ReadConversion(const fs::path& path) {
  std::vector<ConversionRecord> out;
  size_t n = 0;
  for (const std::string& line : SplitLines(ReadFile(path))) {
    ++n;
    if (line.empty()) continue;
    ojson j = ParseRecord(path, n, line, {"problem", "seed", "solution"});
    out.push_back({j["problem"].get<std::string>(), j["seed"].get<std::string>(),
                   j["solution"].get<std::string>()});
  }
  return out;
}

void EmitFinetuneConfig(const fs::path& path, const FineTuneConfig& c) {
  if (c.lora_rank <= 0) throw ConfigError("lora_rank must be positive");
  if (!(c.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (c.max_steps <= 0) throw ConfigError("max_steps must be positive");
  if (c.validation_interval_steps <= 0) {
    throw ConfigError("validation_interval_steps must be positive");
  }
  if (!(c.validation_fraction > 0 && c.validation_fraction < 1)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
  if (c.combination != "generation" && c.combination != "conversion" && c.combination != "both") {
    throw ConfigError("combination must be generation, conversion or both");
  }
  if (c.dataset_paths.empty()) throw ConfigError("no dataset paths");
  size_t records = 0;
  for (const fs::path& p : c.dataset_paths) {
    if (!fs::exists(p)) throw IoError("dataset not found: " + p.string());
    for (const std::string& line : SplitLines(ReadFile(p))) records += !line.empty();
  }
  if (c.validation_fraction * static_cast<double>(records) < 1.0) {
    throw ConfigError("validation split of " + FormatDouble(c.validation_fraction) + " over " +
                      std::to_string(records) + " records holds no record");
  }
  std::vector<std::string> paths;
  for (const fs::path& p : c.dataset_paths) paths.push_back(p.string());
  std::string out;
  out += "base_model_id=" + c.base_model_id + "\n";
  out += "quantization_bits=" + std::to_string(c.quantization_bits) + "\n";
  out += "lora_rank=" + std::to_string(c.lora_rank) + "\n";
  out += "learning_rate=" + FormatDouble(c.learning_rate) + "\n";
  out += "max_steps=" + std::to_string(c.max_steps) + "\n";
  out += "validation_fraction=" + FormatDouble(c.validation_fraction) + "\n";
  out += "validation_interval_steps=" + std::to_string(c.validation_interval_steps) + "\n";
  out += "dataset_paths=" + Join(paths, ",") + "\n";
  out += "shuffle_seed=" + std::to_string(c.shuffle_seed) + "\n";
  out += "combination=" + c.combination + "\n";
  out += "record_count=" + std::to_string(records) + "\n";
  WriteFileAtomic(path, out);
}

FineTuneConfig ReadFinetuneConfig(const fs::path& path) {
  FineTuneConfig c;
  c.dataset_paths.clear();
  for (const std::string& line : SplitLines(ReadFile(path))) {
    size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(0, eq);
    std::string v = line.substr(eq + 1);
    try {
      if (k == "base_model_id") c.base_model_id = v;
      else if (k == "quantization_bits") c.quantization_bits = std::stoi(v);
      else if (k == "lora_rank") c.lora_rank = std::stoi(v);
      else if (k == "learning_rate") c.learning_rate = std::stod(v);
      else if (k == "max_steps") c.max_steps = std::stoi(v);
      else if (k == "validation_fraction") c.validation_fraction = std::stod(v);
      else if (k == "validation_interval_steps") c.validation_interval_steps = std::stoi(v);
      else if (k == "shuffle_seed") c.shuffle_seed = std::stoull(v);
      else if (k == "combination") c.combination = v;
      else if (k == "dataset_paths") {
        for (const std::string& p : Split(v, ',')) {
          if (!p.empty()) c.dataset_paths.emplace_back(p);
        }
      }
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": bad value for " + k);
    }
  }
  return c;
}

}  // namespace futur::dataset
