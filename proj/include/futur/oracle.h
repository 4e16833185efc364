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

// Differential oracle: device-vs-device and library-vs-library comparison of
// execution outcomes, symptom/cause classification of findings, and input
// patterns replayed against the source libraries.

#ifndef FUTUR_ORACLE_H_
#define FUTUR_ORACLE_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "futur/harness.h"
#include "futur/seeds.h"

namespace futur::oracle {

using harness::ExecutionOutcome;
using harness::NumericCapture;

// ---- distance -----------------------------------------------------------------

struct Distance {
  bool structural = false;
  std::string mismatch;  // "shape", "nan_mismatch", "inf_mismatch"
  double value = 0;      // meaningful only when !structural
};

// NaN/NaN and equal-signed Inf pairs agree; a NaN or Inf facing anything else
// is a structural mismatch.
Distance EuclideanDistance(const NumericCapture& a, const NumericCapture& b);

// L2 norm over the finite elements.
double FiniteNorm(const NumericCapture& a);

constexpr double kDefaultThreshold = 1e-2;

// ---- verdicts -------------------------------------------------------------------

enum class Symptom { kCrash, kCpuGpu, kSrcTar };
std::string SymptomName(Symptom s);
Symptom SymptomFromName(const std::string& s);

enum class VerdictKind { kConsistent, kPotentialBug, kUndefined };
std::string VerdictKindName(VerdictKind k);

struct Verdict {
  VerdictKind kind = VerdictKind::kUndefined;
  Symptom symptom = Symptom::kCpuGpu;
  bool structural = false;
  double distance = 0;  // largest normalized distance over compared outputs
  double threshold = kDefaultThreshold;
  std::string signature;  // crash kind, status pair or mismatch kind
  std::string details;

  bool potential_bug() const { return kind == VerdictKind::kPotentialBug; }
  std::string Label() const;  // "consistent", "potential_bug(cpu_gpu)", "undefined"
};

struct CompareOptions {
  double threshold = kDefaultThreshold;
  bool strict_exception_types = false;  // exception vs exception must match types
};

// `reference` is the CPU (resp. source) side; its norm scales the distance.
Verdict CompareBackends(const ExecutionOutcome& cpu, const ExecutionOutcome& gpu,
                        const CompareOptions& options = {});
Verdict CompareLibraries(const ExecutionOutcome& source, const ExecutionOutcome& target,
                         const CompareOptions& options = {});

struct SeedVerdicts {
  std::optional<Verdict> backends;
  std::optional<Verdict> libraries;  // only when the target side is device-consistent
  std::string note;
};

// Applies the gate: library comparison only runs on device-consistent target
// outcomes. Missing or unavailable GPU outcomes leave the CPU result as the
// only target observation.
SeedVerdicts EvaluateSeed(const ExecutionOutcome* cpu, const ExecutionOutcome* gpu,
                          const ExecutionOutcome* source, const CompareOptions& options = {});

// ---- evidence and causes ------------------------------------------------------------

struct ArgEvidence {
  std::string role;  // "arg0", "arg1", ... or "kw:<name>"
  std::string text;
  std::string resolved;  // one level of name resolution, import aliases qualified
};

struct CallEvidence {
  std::string api;  // qualified
  std::vector<ArgEvidence> args;
};

// Calls to `target_library` APIs in `code`, in source order.
std::vector<CallEvidence> ExtractCallEvidence(const std::string& code,
                                              const std::string& target_library);

enum class Cause { kNI, kMPC, kEC, kDBI, kLD, kUnclassified };
std::string CauseName(Cause c);
Cause CauseFromName(const std::string& s);

struct Evidence {
  Symptom symptom = Symptom::kCrash;
  bool wrong_result = false;  // numeric or structural divergence (not a crash)
  std::vector<CallEvidence> calls;
  std::optional<Cause> manual_override;
};

bool ContainsNanOrInf(const std::string& text);
bool ContainsBoundaryValue(const std::string& text);
bool ContainsOutOfDomainInt(const std::string& text);  // negative or beyond int32

// NI > EC > MPC > DBI; LD only through manual_override.
Cause ClassifyCause(const Evidence& evidence);

// ---- bug records ------------------------------------------------------------------

enum class BugStatus { kPotential, kReported, kConfirmedUnknown, kConfirmedKnown, kWontFix };
std::string BugStatusName(BugStatus s);
BugStatus BugStatusFromName(const std::string& s);
bool CanTransition(BugStatus from, BugStatus to);

struct BugRecord {
  std::string id;
  std::string seed_id;
  std::string library;
  std::string api;
  Symptom symptom = Symptom::kCrash;
  Cause cause = Cause::kUnclassified;
  BugStatus status = BugStatus::kPotential;
  std::string signature;
  std::vector<std::string> evidence;  // outcome keys
  std::vector<std::string> duplicates;
  std::string details;

  std::string DedupKey() const;
  void Advance(BugStatus to);  // throws Error on a non-monotone transition
};

// First record per dedup key survives and lists the others as duplicates.
std::vector<BugRecord> DedupBugs(const std::vector<BugRecord>& records);

void WriteBugLedger(const fs::path& path, const std::vector<BugRecord>& bugs);
std::vector<BugRecord> ReadBugLedger(const fs::path& path);

// ---- input patterns -------------------------------------------------------------

enum class ValueClass { kNan, kInf, kHugeInt, kNegativeDim, kZero, kBoundary, kConcrete };
std::string ValueClassName(ValueClass v);
ValueClass ValueClassFromName(const std::string& s);

struct PatternArg {
  std::string role;
  std::string shape_class;  // "scalar", "array[3]", "tuple[2]", "array[2x2]"
  ValueClass value_class = ValueClass::kConcrete;
  std::string concrete;  // resolved argument text
};

struct InputPattern {
  std::string api;
  std::vector<PatternArg> args;
  std::vector<std::string> source_bugs;
  bool needs_review = true;

  bool IsPattern() const;  // some argument is not concrete
};

class UnextractableError : public Error {
 public:
  using Error::Error;
};

ValueClass ClassifyValue(const std::string& resolved_text);
std::string ShapeClass(const std::string& resolved_text);

// Abstracts the arguments of the bug's call. Throws UnextractableError when
// the call has no arguments.
InputPattern ExtractBugPattern(const BugRecord& bug, const CallEvidence& call);

std::string PatternToLine(const InputPattern& p);
InputPattern PatternFromLine(std::string_view line);

// ---- reverse-cycle testing ----------------------------------------------------------

constexpr double kHugeIntProbes[] = {2147483648.0, 9223372036854775807.0, 1e20};

struct BacktestOptions {
  std::map<std::string, std::string> api_map;  // target API -> source API
  std::string target_root;                     // "toy"
  std::string source_root;                     // "ref"
  std::string array_constructor;               // "ref.array"
  std::string import_line;                     // "import ref"
  size_t max_probes_per_pattern = 64;
};

struct ProbeSeed {
  std::string id;
  std::string target_api;
  std::string source_api;
  std::string text;
};

std::vector<std::string> InstantiateProbes(const PatternArg& arg, const BacktestOptions& options);

// Throws ConfigError when the pattern is not a pattern. Unmapped APIs yield
// nothing and a report line.
std::vector<ProbeSeed> RenderProbeSeeds(const InputPattern& pattern,
                                        const BacktestOptions& options,
                                        std::vector<std::string>* report = nullptr);

// ---- campaign analysis -----------------------------------------------------------

struct AnalysisResult {
  std::vector<std::pair<std::string, SeedVerdicts>> verdicts;  // per seed id
  std::vector<BugRecord> bugs;                                   // deduplicated
  std::vector<InputPattern> patterns;
  std::vector<std::string> log;
};

AnalysisResult AnalyzeCampaign(const std::vector<seeds::SeedCode>& seeds,
                               const std::vector<ExecutionOutcome>& outcomes,
                               const CompareOptions& options);

}  // namespace futur::oracle

#endif  // FUTUR_ORACLE_H_
