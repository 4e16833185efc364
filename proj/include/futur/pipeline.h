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

// Campaign configuration and stage orchestration behind the `futur` command.

#ifndef FUTUR_PIPELINE_H_
#define FUTUR_PIPELINE_H_

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "futur/util.h"

namespace futur::pipeline {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitStageFailure = 2;
constexpr int kExitMissingPrerequisite = 3;

// key=value lines grouped under [section] headers. Every known key has a
// default; unknown sections or keys are rejected. Keys are addressed as
// "section.key". Relative paths resolve against the config file's directory.
class Config {
 public:
  static Config Defaults();
  // Throws ConfigError on syntax errors and unknown keys.
  static Config Parse(std::string_view text, const fs::path& base_dir);
  // File values, then FUTUR_<SECTION>_<KEY> environment variables.
  static Config Load(const fs::path& path, bool with_environment = true);

  // Applies FUTUR_<SECTION>_<KEY>=value entries of a null-terminated
  // environment block; variables naming unknown sections are ignored.
  void ApplyEnvironment(char** envp);
  // "section.key=value".
  void ApplyOverride(std::string_view assignment);

  void Set(const std::string& key, const std::string& value);
  const std::string& Get(const std::string& key) const;
  int64_t GetInt(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  // Empty stays empty; relative paths are joined to base_dir().
  fs::path GetPath(const std::string& key) const;
  // Comma-separated, trimmed, empty items dropped.
  std::vector<std::string> GetList(const std::string& key) const;

  std::string Dump() const;
  std::string DumpSection(const std::string& section) const;

  const fs::path& base_dir() const { return base_dir_; }
  const std::map<std::string, std::string>& values() const { return values_; }
  bool operator==(const Config& other) const { return values_ == other.values_; }

 private:
  std::map<std::string, std::string> values_;
  fs::path base_dir_;
};

struct StageSpec {
  std::string name;
  std::vector<std::string> deps;
  std::vector<std::string> sections;  // config sections the stage reads
};

const std::vector<StageSpec>& Stages();
const StageSpec* FindStage(const std::string& name);
// Kahn's algorithm; ties keep declaration order. Throws Error on a cycle.
std::vector<std::string> TopologicalOrder(const std::vector<StageSpec>& stages);

struct RunOptions {
  bool force = false;  // ignore a matching stamp
};

// Runs one stage (or "all"); returns one of the exit codes above.
int RunStage(const std::string& stage, const Config& config, std::ostream& out,
             std::ostream& err, const RunOptions& options = {});

// Content hash of the stage's inputs: its config sections, prerequisite
// stamps and external input files.
std::string StageFingerprint(const StageSpec& stage, const Config& config);
fs::path StampPath(const Config& config, const std::string& stage);

}  // namespace futur::pipeline

#endif  // FUTUR_PIPELINE_H_
