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

#include "futur/harness.h"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <thread>

#include "json.hpp"

extern char** environ;

namespace futur::harness {

using json = nlohmann::json;

std::string DeviceName(Device d) { return d == Device::kCpu ? "cpu" : "gpu"; }

Device DeviceFromName(const std::string& name) {
  if (name == "cpu") return Device::kCpu;
  if (name == "gpu") return Device::kGpu;
  throw ConfigError("unknown device: " + name);
}

uint64_t NumericCapture::element_count() const {
  uint64_t n = 1;
  for (uint64_t d : shape) n *= d;
  return n;
}

std::string StatusName(Status s) {
  switch (s) {
    case Status::kOk: return "ok";
    case Status::kException: return "exception";
    case Status::kCrash: return "crash";
    case Status::kProtocolError: return "protocol_error";
    case Status::kDeviceUnavailable: return "device_unavailable";
  }
  return "?";
}

std::string CrashKindName(CrashKind k) {
  switch (k) {
    case CrashKind::kNone: return "none";
    case CrashKind::kAbort: return "abort";
    case CrashKind::kSegfault: return "segfault";
    case CrashKind::kFpe: return "fpe";
    case CrashKind::kHang: return "hang";
    case CrashKind::kOtherSignal: return "other_signal";
  }
  return "?";
}

namespace {

Status StatusFromName(const std::string& s) {
  for (Status st : {Status::kOk, Status::kException, Status::kCrash, Status::kProtocolError,
                    Status::kDeviceUnavailable}) {
    if (StatusName(st) == s) return st;
  }
  throw ParseError("unknown status: " + s);
}

CrashKind CrashKindFromName(const std::string& s) {
  for (CrashKind k : {CrashKind::kNone, CrashKind::kAbort, CrashKind::kSegfault, CrashKind::kFpe,
                      CrashKind::kHang, CrashKind::kOtherSignal}) {
    if (CrashKindName(k) == s) return k;
  }
  throw ParseError("unknown crash kind: " + s);
}

json ValueToJson(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  return v;
}

double ValueFromJson(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string& s = j.get_ref<const std::string&>();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "Inf") return std::numeric_limits<double>::infinity();
    if (s == "-Inf") return -std::numeric_limits<double>::infinity();
  }
  throw ParseError("bad numeric value: " + j.dump());
}

json CaptureToJson(const NumericCapture& c) {
  json j;
  j["name"] = c.name;
  j["shape"] = c.shape;
  j["dtype"] = c.dtype;
  json values = json::array();
  for (double v : c.values) values.push_back(ValueToJson(v));
  j["values"] = std::move(values);
  if (c.lossy) j["lossy"] = true;
  return j;
}

NumericCapture CaptureFromJson(const json& j) {
  if (!j.is_object()) throw ParseError("capture is not an object");
  NumericCapture c;
  try {
    c.name = j.at("name").get<std::string>();
    c.shape = j.at("shape").get<std::vector<uint64_t>>();
    c.dtype = j.at("dtype").get<std::string>();
    for (const json& v : j.at("values")) c.values.push_back(ValueFromJson(v));
    c.lossy = j.value("lossy", false);
  } catch (const json::exception& e) {
    throw ParseError(std::string("capture: ") + e.what());
  }
  if (c.values.size() != c.element_count()) {
    throw ParseError("capture " + c.name + ": " + std::to_string(c.values.size()) +
                     " values for " + std::to_string(c.element_count()) + " elements");
  }
  return c;
}

json ErrorToJson(const ErrorInfo& e) {
  return json{{"type", e.type}, {"message", e.message}, {"trace", e.trace}};
}

ErrorInfo ErrorFromJson(const json& j) {
  ErrorInfo e;
  e.type = j.value("type", "");
  e.message = j.value("message", "");
  e.trace = j.value("trace", "");
  return e;
}

}  // namespace

ResultRecord ParseResultRecord(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("result record: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("result record is not an object");
  ResultRecord r;
  try {
    r.status = j.at("status").get<std::string>();
    if (r.status != "ok" && r.status != "exception") {
      throw ParseError("result record status must be ok or exception, got " + r.status);
    }
    if (j.contains("error") && !j["error"].is_null()) {
      if (r.status == "ok") throw ParseError("ok record carries an error");
      r.error = ErrorFromJson(j["error"]);
    }
    if (r.status == "exception" && !r.error) throw ParseError("exception record without error");
    for (const json& c : j.at("outputs")) r.outputs.push_back(CaptureFromJson(c));
    r.api_calls_observed = j.at("api_calls_observed").get<std::vector<std::string>>();
    r.duration_ms = j.at("duration_ms").get<int64_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("result record: ") + e.what());
  }
  return r;
}

std::string FormatResultRecord(const ResultRecord& r) {
  json j;
  j["status"] = r.status;
  j["error"] = r.error ? ErrorToJson(*r.error) : json(nullptr);
  j["outputs"] = json::array();
  for (const NumericCapture& c : r.outputs) j["outputs"].push_back(CaptureToJson(c));
  j["api_calls_observed"] = r.api_calls_observed;
  j["duration_ms"] = r.duration_ms;
  return j.dump();
}

std::string ExecutionOutcome::Key() const {
  return seed_id + "|" + DeviceName(device) + "|" + role;
}

std::string ExecutionOutcome::StatusLabel() const {
  switch (status) {
    case Status::kCrash:
      if (crash == CrashKind::kOtherSignal) return "crash(other_signal " + std::to_string(signal) + ")";
      return "crash(" + CrashKindName(crash) + ")";
    case Status::kException: return "exception(" + error.type + ")";
    default: return StatusName(status);
  }
}

void ClassifyOutcome(const ProcessResult& p, const std::optional<std::string>& record,
                     ExecutionOutcome* out) {
  out->duration_ms = p.duration_ms;
  out->crash = CrashKind::kNone;
  out->signal = 0;
  if (p.timed_out) {
    out->status = Status::kCrash;
    out->crash = CrashKind::kHang;
    out->runner_exit = p.signaled ? p.signal : p.exit_code;
    return;
  }
  int sig = 0;
  if (p.signaled) {
    sig = p.signal;
  } else if (p.exit_code > 128 && p.exit_code < 128 + 65) {
    sig = p.exit_code - 128;
  }
  out->runner_exit = p.signaled ? p.signal : p.exit_code;
  if (sig != 0) {
    out->status = Status::kCrash;
    out->signal = sig;
    switch (sig) {
      case SIGABRT: out->crash = CrashKind::kAbort; break;
      case SIGSEGV: out->crash = CrashKind::kSegfault; break;
      case SIGFPE: out->crash = CrashKind::kFpe; break;
      default: out->crash = CrashKind::kOtherSignal; break;
    }
    return;
  }
  if (p.exit_code != 0) {
    out->status = Status::kProtocolError;
    out->detail = "runner exited with " + std::to_string(p.exit_code);
    return;
  }
  if (!record || Trim(*record).empty()) {
    out->status = Status::kProtocolError;
    out->detail = "no result record";
    return;
  }
  ResultRecord r;
  try {
    r = ParseResultRecord(*record);
  } catch (const ParseError& e) {
    out->status = Status::kProtocolError;
    out->detail = e.what();
    return;
  }
  out->outputs = std::move(r.outputs);
  out->api_calls_observed = std::move(r.api_calls_observed);
  if (r.status == "ok") {
    out->status = Status::kOk;
    return;
  }
  out->error = *r.error;
  out->status = out->error.type == "DeviceUnavailable" ? Status::kDeviceUnavailable
                                                       : Status::kException;
}

namespace {

int64_t NowMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string Tail(const fs::path& path, size_t n) {
  if (!fs::exists(path)) return "";
  std::string s = ReadFile(path);
  return s.size() > n ? s.substr(s.size() - n) : s;
}

}  // namespace

ExecutionOutcome RunSeed(const RunRequest& req, const fs::path& work_dir, int64_t timeout_ms) {
  if (!fs::exists(req.runner.executable) || access(req.runner.executable.c_str(), X_OK) != 0) {
    throw ConfigError("runner not executable: " + req.runner.executable.string());
  }
  fs::create_directories(work_dir);
  std::string stem = SanitizeName(req.seed_id) + "." + req.role + "." + DeviceName(req.device);
  fs::path emit = work_dir / (stem + ".json");
  fs::path log = work_dir / (stem + ".log");
  fs::remove(emit);

  std::vector<std::string> args = {req.runner.executable.string()};
  args.insert(args.end(), req.runner.extra_args.begin(), req.runner.extra_args.end());
  args.insert(args.end(), {"--seed", req.seed_path.string(), "--device", DeviceName(req.device),
                           "--emit", emit.string()});
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&actions, 1, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, 1, 2);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  sigset_t none;
  sigemptyset(&none);
  sigset_t defaults;
  sigfillset(&defaults);
  posix_spawnattr_setsigmask(&attr, &none);
  posix_spawnattr_setsigdefault(&attr, &defaults);
  posix_spawnattr_setpgroup(&attr, 0);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGMASK |
                                      POSIX_SPAWN_SETSIGDEF);
  pid_t pid = 0;
  int64_t start = NowMs();
  int rc = posix_spawn(&pid, argv[0], &actions, &attr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) {
    throw ConfigError("cannot spawn runner " + args[0] + ": " + std::strerror(rc));
  }

  ProcessResult p;
  int status = 0;
  int64_t sleep_ms = 1;
  while (true) {
    pid_t w = waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) throw IoError("waitpid failed");
    if (NowMs() - start >= timeout_ms) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      p.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
    sleep_ms = std::min<int64_t>(sleep_ms * 2, 20);
  }
  // Reap anything the runner left behind in its group.
  kill(-pid, SIGKILL);
  p.duration_ms = NowMs() - start;
  if (WIFSIGNALED(status)) {
    p.signaled = true;
    p.signal = WTERMSIG(status);
  } else if (WIFEXITED(status)) {
    p.exit_code = WEXITSTATUS(status);
  }

  std::optional<std::string> record;
  if (!p.timed_out && fs::exists(emit)) record = ReadFile(emit);
  ExecutionOutcome out;
  out.seed_id = req.seed_id;
  out.device = req.device;
  out.role = req.role;
  ClassifyOutcome(p, record, &out);
  if (out.status == Status::kProtocolError) {
    std::string tail = Tail(log, 400);
    if (!tail.empty()) out.detail += "; runner log: " + tail;
  }
  return out;
}

std::string OutcomeToLine(const ExecutionOutcome& o) {
  json j;
  j["seed_id"] = o.seed_id;
  j["device"] = DeviceName(o.device);
  j["role"] = o.role;
  j["status"] = StatusName(o.status);
  j["crash"] = CrashKindName(o.crash);
  j["signal"] = o.signal;
  j["error"] = ErrorToJson(o.error);
  j["outputs"] = json::array();
  for (const NumericCapture& c : o.outputs) j["outputs"].push_back(CaptureToJson(c));
  j["api_calls_observed"] = o.api_calls_observed;
  j["duration_ms"] = o.duration_ms;
  j["runner_exit"] = o.runner_exit;
  j["detail"] = o.detail;
  return j.dump();
}

ExecutionOutcome OutcomeFromLine(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("outcome line: ") + e.what());
  }
  ExecutionOutcome o;
  try {
    o.seed_id = j.at("seed_id").get<std::string>();
    o.device = DeviceFromName(j.at("device").get<std::string>());
    o.role = j.at("role").get<std::string>();
    o.status = StatusFromName(j.at("status").get<std::string>());
    o.crash = CrashKindFromName(j.at("crash").get<std::string>());
    o.signal = j.at("signal").get<int>();
    o.error = ErrorFromJson(j.at("error"));
    for (const json& c : j.at("outputs")) o.outputs.push_back(CaptureFromJson(c));
    o.api_calls_observed = j.at("api_calls_observed").get<std::vector<std::string>>();
    o.duration_ms = j.at("duration_ms").get<int64_t>();
    o.runner_exit = j.at("runner_exit").get<int>();
    o.detail = j.at("detail").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("outcome line: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("outcome line: ") + e.what());
  }
  return o;
}

OutcomeLedger::OutcomeLedger(fs::path path) : path_(std::move(path)) {
  if (!fs::exists(path_)) return;
  std::string text = ReadFile(path_);
  size_t end = text.rfind('\n');
  size_t complete = end == std::string::npos ? 0 : end + 1;
  if (complete != text.size()) {
    text.resize(complete);
    WriteFileAtomic(path_, text);
  }
  size_t n = 0;
  for (const std::string& line : SplitLines(text)) {
    ++n;
    if (line.empty()) continue;
    ExecutionOutcome o;
    try {
      o = OutcomeFromLine(line);
    } catch (const ParseError& e) {
      throw ParseError(path_.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    if (keys_.insert(o.Key()).second) outcomes_.push_back(std::move(o));
  }
}

bool OutcomeLedger::Contains(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  return keys_.count(key) > 0;
}

void OutcomeLedger::Append(const ExecutionOutcome& o) {
  std::string line = OutcomeToLine(o) + "\n";
  std::lock_guard<std::mutex> lock(mu_);
  if (keys_.count(o.Key())) return;
  if (!path_.parent_path().empty()) fs::create_directories(path_.parent_path());
  int fd = open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw IoError("cannot open ledger " + path_.string());
  size_t off = 0;
  while (off < line.size()) {
    ssize_t w = write(fd, line.data() + off, line.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      close(fd);
      throw IoError("cannot append to ledger " + path_.string());
    }
    off += static_cast<size_t>(w);
  }
  close(fd);
  keys_.insert(o.Key());
  outcomes_.push_back(o);
}

std::vector<ExecutionOutcome> OutcomeLedger::Outcomes() const {
  std::lock_guard<std::mutex> lock(mu_);
  return outcomes_;
}

CampaignStats RunCampaign(const std::vector<RunRequest>& requests, OutcomeLedger& ledger,
                          const CampaignOptions& options) {
  if (options.parallelism < 1) throw ConfigError("parallelism must be at least 1");
  CampaignStats stats;
  std::vector<const RunRequest*> todo;
  std::set<std::string> queued;
  std::set<fs::path> runners;
  for (const RunRequest& r : requests) {
    ExecutionOutcome probe;
    probe.seed_id = r.seed_id;
    probe.device = r.device;
    probe.role = r.role;
    std::string key = probe.Key();
    if (ledger.Contains(key)) {
      ++stats.skipped;
      continue;
    }
    if (!queued.insert(key).second) continue;
    todo.push_back(&r);
    runners.insert(r.runner.executable);
  }
  for (const fs::path& exe : runners) {
    if (!fs::exists(exe) || access(exe.c_str(), X_OK) != 0) {
      throw ConfigError("runner not executable: " + exe.string());
    }
  }
  stats.scheduled = todo.size();

  std::atomic<size_t> next{0};
  std::atomic<size_t> started{0};
  std::atomic<int> running{0};
  std::atomic<int> peak{0};
  std::mutex mu;
  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      if (options.stop_after > 0 && started.fetch_add(1) >= options.stop_after) return;
      int now = running.fetch_add(1) + 1;
      int prev = peak.load();
      while (now > prev && !peak.compare_exchange_weak(prev, now)) {
      }
      try {
        ExecutionOutcome o = RunSeed(*todo[i], options.work_dir, options.timeout_ms);
        ledger.Append(o);
        std::lock_guard<std::mutex> lock(mu);
        ++stats.executed;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        stats.failures.push_back(todo[i]->seed_id + ": " + e.what());
      }
      running.fetch_sub(1);
    }
  };
  std::vector<std::thread> pool;
  int n = std::min<int>(options.parallelism, static_cast<int>(std::max<size_t>(todo.size(), 1)));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  stats.max_concurrent = peak.load();
  return stats;
}

}  // namespace futur::harness
