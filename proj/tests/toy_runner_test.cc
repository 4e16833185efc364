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

// The stub runner against the wire protocol, through the real harness.

#include <gtest/gtest.h>
#include <stdlib.h>

#include <cmath>

#include "futur/harness.h"
#include "test_fixtures.h"

namespace futur::harness {
namespace {

using futur::testing::TempDir;

ExecutionOutcome Exec(const TempDir& dir, const std::string& code, Device d = Device::kCpu) {
  static int n = 0;
  RunRequest r;
  r.seed_id = "t" + std::to_string(n++);
  r.seed_path = dir / (r.seed_id + ".py");
  r.device = d;
  r.runner.executable = FUTUR_TOY_RUNNER;
  WriteFile(r.seed_path, code);
  return RunSeed(r, dir / "work", 5000);
}

TEST(ToyRunnerTest, IdentityCapture) {
  TempDir dir;
  ExecutionOutcome o = Exec(dir, "import toy\ny = toy.eye(2)\nprint(y)\n");
  ASSERT_EQ(o.status, Status::kOk) << o.detail << o.error.message;
  ASSERT_EQ(o.outputs.size(), 1u);
  EXPECT_EQ(o.outputs[0].shape, (std::vector<uint64_t>{2, 2}));
  EXPECT_EQ(o.outputs[0].values, (std::vector<double>{1, 0, 0, 1}));
  EXPECT_EQ(o.api_calls_observed, std::vector<std::string>{"toy.eye"});
}

TEST(ToyRunnerTest, ExceptionAndCaptureHeader) {
  TempDir dir;
  ExecutionOutcome o = Exec(dir, "import toy\ntoy.eye(-1)\n");
  EXPECT_EQ(o.StatusLabel(), "exception(ValueError)");
  o = Exec(dir,
          "import ref as r\n# CAPTURE: b\na = r.array([1.0, 2.0])\n"
          "b = r.cumsum(r.array([float('nan'),\n    1.0, 2.0]))\n");
  ASSERT_EQ(o.status, Status::kOk) << o.error.message;
  ASSERT_EQ(o.outputs.size(), 1u);
  EXPECT_EQ(o.outputs[0].name, "b");
  EXPECT_TRUE(std::isnan(o.outputs[0].values[0]));
  EXPECT_TRUE(std::isnan(o.outputs[0].values[2]));
  EXPECT_EQ(o.api_calls_observed, (std::vector<std::string>{"ref.array", "ref.cumsum"}));
}

TEST(ToyRunnerTest, PlantedDefects) {
  TempDir dir;
  EXPECT_EQ(Exec(dir, "import toy\ntoy.eye(2147483648, 5)\n").StatusLabel(), "crash(segfault)");
  EXPECT_EQ(Exec(dir, "import ref\nref.eye(2147483648, 5)\n").StatusLabel(),
            "exception(MemoryError)");
  EXPECT_EQ(Exec(dir, "from toy import full\nx = full((2, -3), 1.0)\n").StatusLabel(),
            "crash(abort)");
  ExecutionOutcome t = Exec(dir, "import toy\nx = toy.eye(3, 4)\n");
  ExecutionOutcome r = Exec(dir, "import ref\nx = ref.eye(3, 4)\n");
  EXPECT_EQ(t.outputs[0].shape, (std::vector<uint64_t>{3, 3}));
  EXPECT_EQ(r.outputs[0].shape, (std::vector<uint64_t>{3, 4}));
  std::string scan = "import toy\nx = toy.cumsum(toy.array([1, 1, 1, 1, 1, 1]))\n";
  EXPECT_EQ(Exec(dir, scan).outputs[0].values, (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(Exec(dir, scan, Device::kGpu).outputs[0].values,
            (std::vector<double>{1, 2, 3, 4, 1, 2}));
}

TEST(ToyRunnerTest, DeviceUnavailable) {
  TempDir dir;
  setenv("FUTUR_TOY_NO_GPU", "1", 1);
  ExecutionOutcome o = Exec(dir, "import toy\nx = toy.eye(2)\n", Device::kGpu);
  unsetenv("FUTUR_TOY_NO_GPU");
  EXPECT_EQ(o.status, Status::kDeviceUnavailable);
}

}  // namespace
}  // namespace futur::harness
