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

// Out-of-process seed execution. Every run spawns a fresh runner:
//
//   <runner> --seed <path> --device <cpu|gpu> --emit <out-path>
//
// Exit 0 means a result record was written to <out-path>; anything else is a
// native failure that the harness classifies.

#ifndef FUTUR_HARNESS_H_
#define FUTUR_HARNESS_H_

#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "futur/util.h"

namespace futur::harness {

enum class Device { kCpu, kGpu };
std::string DeviceName(Device d);
Device DeviceFromName(const std::string& name);

struct NumericCapture {
  std::string name;
  std::vector<uint64_t> shape;
  std::string dtype;
  std::vector<double> values;
  bool lossy = false;  // integer magnitudes beyond 2^53 were widened

  uint64_t element_count() const;
};

enum class Status { kOk, kException, kCrash, kProtocolError, kDeviceUnavailable };
enum class CrashKind { kNone, kAbort, kSegfault, kFpe, kHang, kOtherSignal };

std::string StatusName(Status s);
std::string CrashKindName(CrashKind k);

struct ErrorInfo {
  std::string type;
  std::string message;
  std::string trace;
};

// What the runner writes to --emit.
struct ResultRecord {
  std::string status;  // "ok" | "exception"
  std::optional<ErrorInfo> error;
  std::vector<NumericCapture> outputs;
  std::vector<std::string> api_calls_observed;
  int64_t duration_ms = 0;
};

// Throws ParseError on anything outside the record schema.
ResultRecord ParseResultRecord(std::string_view text);
std::string FormatResultRecord(const ResultRecord& record);

struct ExecutionOutcome {
  std::string seed_id;
  Device device = Device::kCpu;
  std::string role = "target";  // "target" or "source"
  Status status = Status::kProtocolError;
  CrashKind crash = CrashKind::kNone;
  int signal = 0;
  ErrorInfo error;
  std::vector<NumericCapture> outputs;
  std::vector<std::string> api_calls_observed;
  int64_t duration_ms = 0;
  int runner_exit = 0;  // exit code, or signal number when signaled
  std::string detail;

  std::string Key() const;
  std::string StatusLabel() const;  // "crash(segfault)", "exception(ValueError)", ...
};

// How the worker process ended.
struct ProcessResult {
  bool signaled = false;
  int exit_code = 0;
  int signal = 0;
  bool timed_out = false;
  int64_t duration_ms = 0;
};

// Maps a process result plus the emitted record text (if any) onto the
// outcome status fields. Exit codes above 128 are read as 128+signal, the
// convention of shells and wrapper scripts.
void ClassifyOutcome(const ProcessResult& process, const std::optional<std::string>& record,
                     ExecutionOutcome* outcome);

struct RunnerHandle {
  fs::path executable;
  std::vector<std::string> extra_args;
};

struct RunRequest {
  std::string seed_id;
  fs::path seed_path;
  Device device = Device::kCpu;
  std::string role = "target";
  RunnerHandle runner;
};

constexpr int64_t kDefaultTimeoutMs = 30000;

// Throws ConfigError when the runner is missing or cannot be spawned.
ExecutionOutcome RunSeed(const RunRequest& request, const fs::path& work_dir,
                         int64_t timeout_ms = kDefaultTimeoutMs);

std::string OutcomeToLine(const ExecutionOutcome& outcome);
ExecutionOutcome OutcomeFromLine(std::string_view line);

// Append-only outcome log keyed by (seed, device, role). Opening it drops a
// torn trailing line left by an interrupted writer.
class OutcomeLedger {
 public:
  explicit OutcomeLedger(fs::path path);

  bool Contains(const std::string& key) const;
  void Append(const ExecutionOutcome& outcome);
  std::vector<ExecutionOutcome> Outcomes() const;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  mutable std::mutex mu_;
  std::vector<ExecutionOutcome> outcomes_;
  std::set<std::string> keys_;
};

struct CampaignOptions {
  int parallelism = 1;
  int64_t timeout_ms = kDefaultTimeoutMs;
  fs::path work_dir;
  size_t stop_after = 0;  // 0 = run everything; otherwise stop after this many new runs
};

struct CampaignStats {
  size_t scheduled = 0;
  size_t skipped = 0;  // already in the ledger
  size_t executed = 0;
  int max_concurrent = 0;
  std::vector<std::string> failures;  // harness-level errors per run
};

CampaignStats RunCampaign(const std::vector<RunRequest>& requests, OutcomeLedger& ledger,
                          const CampaignOptions& options);

}  // namespace futur::harness

#endif  // FUTUR_HARNESS_H_
