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

// Fixture runner for harness triage tests. The seed's first line selects the
// behavior: "# MODE: <abort|segfault|fpe|clean|exception|hang|empty|exit1|garbage>",
// optionally followed by "# SLEEP_MS: <n>" before acting.

#include <signal.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

namespace {

void Write(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  std::string seed, device, emit;
  for (int i = 1; i + 1 < argc; i += 2) {
    std::string flag = argv[i];
    if (flag == "--seed") seed = argv[i + 1];
    else if (flag == "--device") device = argv[i + 1];
    else if (flag == "--emit") emit = argv[i + 1];
  }
  if (seed.empty() || emit.empty()) {
    std::cerr << "usage: triage_runner --seed <path> --device <cpu|gpu> --emit <path>\n";
    return 64;
  }
  std::ifstream in(seed);
  std::string mode;
  int sleep_ms = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("# MODE: ", 0) == 0) mode = line.substr(8);
    if (line.rfind("# SLEEP_MS: ", 0) == 0) sleep_ms = std::stoi(line.substr(12));
  }
  if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));

  if (mode == "abort") std::abort();
  if (mode == "segfault") raise(SIGSEGV);
  if (mode == "fpe") raise(SIGFPE);
  if (mode == "hang") {
    while (true) pause();
  }
  if (mode == "empty") return 0;
  if (mode == "exit1") return 1;
  if (mode == "garbage") {
    Write(emit, "{\"status\": \"ok\", \"outputs\": [");
    return 0;
  }
  if (mode == "exception") {
    Write(emit,
          "{\"status\":\"exception\",\"error\":{\"type\":\"ValueError\",\"message\":\"bad "
          "argument\",\"trace\":\"line 2\"},\"outputs\":[],\"api_calls_observed\":[\"toy.eye\"],"
          "\"duration_ms\":1}");
    return 0;
  }
  if (mode == "clean") {
    Write(emit,
          "{\"status\":\"ok\",\"error\":null,\"outputs\":[{\"name\":\"y\",\"shape\":[2,2],"
          "\"dtype\":\"float32\",\"values\":[1.0,0.0,\"NaN\",\"-Inf\"]}],"
          "\"api_calls_observed\":[\"toy.eye\"],\"duration_ms\":1}");
    return 0;
  }
  std::cerr << "unknown mode '" << mode << "' on " << device << "\n";
  return 2;
}
