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

// futur <stage> --config <file> [--override section.key=value]...

#include <iostream>

#include "CLI11.hpp"
#include "futur/pipeline.h"

namespace pl = futur::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Differential fuzzing campaign driver"};
  std::string stage;
  std::string config_path;
  std::vector<std::string> overrides;
  bool force = false;
  bool list = false;
  std::string source, label, dump, out;
  bool live = false;

  std::string stages = "all";
  for (const pl::StageSpec& s : pl::Stages()) stages += ", " + s.name;
  app.add_option("stage", stage, "stage to run: " + stages);
  app.add_option("--config", config_path, "campaign config file");
  app.add_option("--override", overrides, "section.key=value, applied after the environment")
      ->take_all();
  app.add_flag("--force", force, "run even when the stamp says up to date");
  app.add_flag("--list", list, "print the stages in run order and exit");
  // Shorthands for the mining stage.
  app.add_option("--source", source, "mine: source library name");
  app.add_option("--label", label, "mine: issue label");
  app.add_option("--dump", dump, "mine: offline dump file");
  app.add_flag("--live", live, "mine: query the tracker instead of a dump");
  app.add_option("--out", out, "mine: corpus output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? pl::kExitOk : pl::kExitUsage;
  }

  if (list) {
    for (const std::string& s : pl::TopologicalOrder(pl::Stages())) std::cout << s << "\n";
    return pl::kExitOk;
  }
  if (stage.empty()) {
    std::cerr << app.help();
    return pl::kExitUsage;
  }

  pl::Config config;
  try {
    if (config_path.empty()) {
      config = pl::Config::Defaults();
      config.ApplyEnvironment(environ);
    } else {
      config = pl::Config::Load(config_path);
    }
    if (!source.empty()) config.Set("corpus.source", source);
    if (!label.empty()) config.Set("corpus.label", label);
    if (!dump.empty()) config.Set("corpus.dump", futur::fs::absolute(dump).string());
    if (live) config.Set("corpus.live", "true");
    if (!out.empty()) config.Set("corpus.out", futur::fs::absolute(out).string());
    for (const std::string& o : overrides) config.ApplyOverride(o);
  } catch (const futur::Error& e) {
    std::cerr << "futur: " << e.what() << "\n";
    return pl::kExitUsage;
  }

  pl::RunOptions options;
  options.force = force;
  return pl::RunStage(stage, config, std::cout, std::cerr, options);
}
