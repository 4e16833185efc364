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

// Fixture builders shared by unit and acceptance tests.

#ifndef FUTUR_TESTS_TEST_FIXTURES_H_
#define FUTUR_TESTS_TEST_FIXTURES_H_

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "futur/corpus.h"
#include "futur/util.h"

namespace futur::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "futur") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

struct NansInfsDumpCounts {
  size_t issues = 0;
  size_t usable = 0;        // issues yielding exactly one storable snippet
  size_t unparseable = 0;   // issues whose tagged snippet must be rejected
};

// Offline dump shaped like the "Nans and Infs" label of the PyTorch tracker:
// 138 issues of which 43 carry a usable reproduction snippet. Five more carry
// a tagged snippet that cannot be repaired; the rest have no code at all or
// only untagged environment dumps.
inline NansInfsDumpCounts WriteNansInfsDump(const fs::path& path) {
  static const char* kApis[] = {"sum", "mean", "std", "var", "logsumexp", "softmax",
                                "cumsum", "prod", "norm", "max", "min", "sort"};
  std::string out;
  NansInfsDumpCounts counts;
  for (int i = 0; i < 138; ++i) {
    corpus::IssueRecord r;
    r.source_library = "pytorch";
    r.issue_id = 90000 + i * 13;
    r.label = "Nans and Infs";
    r.url = "https://github.com/pytorch/pytorch/issues/" + std::to_string(r.issue_id);
    std::string api = kApis[i % 12];
    r.title = "torch." + api + " returns NaN for input #" + std::to_string(i) + "?";
    std::string body = "### \xF0\x9F\x90\x9B Describe the bug\n\n`torch." + api +
                       "` misbehaves when the input holds NaN.\n\n";
    if (i < 43) {
      body += "### Standalone code to reproduce the issue\n\n```python\n";
      switch (i % 4) {
        case 0:
          body += "import torch\nx = torch.tensor([float('nan'), 1.0, 2.0])\nprint(torch." + api +
                  "(x))\n";
          break;
        case 1:  // missing import, injected by preprocessing
          body += "x = torch.tensor([1.0, float('inf')])\ny = torch." + api + "(x)\n";
          break;
        case 2:  // interactive session with printed output
          body += ">>> import torch\n>>> a = torch.full((2, 2), float('nan'))\n>>> torch." + api +
                  "(a)\ntensor(nan)\n";
          break;
        default:  // pasted traceback and a shell line
          body += "$ pip install torch==2.0.0\nimport torch\nt = torch.ones(3) / 0\ntorch." + api +
                  "(t)\nTraceback (most recent call last):\n  File \"x.py\", line 4, in "
                  "<module>\nRuntimeError: bad value\n";
          break;
      }
      body += "```\n\n### Versions\n\n```\nPyTorch version: 2.0.0\n```\n";
      ++counts.usable;
    } else if (i < 48) {
      body += "### Standalone code to reproduce the issue\n\n```python\nx = torch." + api +
              "(torch.ones(2), dim=)\n```\n";
      ++counts.unparseable;
    } else if (i % 2 == 0) {
      body += "No reproducer available, happens inside a large training job.\n";
    } else {
      body += "### Versions\n\n```\nCollecting environment information...\nOS: Ubuntu\n```\n";
    }
    r.body = body;
    out += corpus::ToDumpLine(r, 1 + i / 30) + "\n";
    ++counts.issues;
  }
  WriteFile(path, out);
  return counts;
}

}  // namespace futur::testing

#endif  // FUTUR_TESTS_TEST_FIXTURES_H_
