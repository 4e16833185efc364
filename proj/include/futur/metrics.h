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

// Campaign metrics (success rate, validity rate, API coverage) and the
// report tables built from them and from the bug ledger.

#ifndef FUTUR_METRICS_H_
#define FUTUR_METRICS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "futur/harness.h"
#include "futur/oracle.h"
#include "futur/seeds.h"

namespace futur::metrics {

using harness::ExecutionOutcome;

// Exact, unreduced ratio. den == 0 means undefined.
struct Rational {
  uint64_t num = 0;
  uint64_t den = 0;

  bool defined() const { return den != 0; }
  friend bool operator==(const Rational& a, const Rational& b);
};

enum class RoundMode { kNearest, kTruncate };

// "10.2%"; "-" when undefined. Half-way values round up under kNearest.
std::string RenderPercent(const Rational& r, int precision = 1, RoundMode mode = RoundMode::kNearest);
// "10.2% (156/1530)"; "-" when undefined.
std::string RenderRate(const Rational& r, int precision = 1, RoundMode mode = RoundMode::kNearest);

// ---- behavior signatures -----------------------------------------------------

// Lower-cased leading words of an error message with numbers, paths and
// addresses removed.
std::string NormalizeErrorMessage(std::string_view message, size_t max_words = 6);

struct BehaviorSignature {
  enum class Kind { kCrash, kError, kOutputs };
  Kind kind = Kind::kOutputs;
  harness::CrashKind crash = harness::CrashKind::kNone;
  std::string error_type;
  std::string error_words;
  std::vector<harness::NumericCapture> outputs;

  std::string Describe() const;
};

// From the source-library run of a historical bug code. Unusable outcomes
// (protocol errors, missing device) give no signature.
std::optional<BehaviorSignature> SignatureFromOutcome(const ExecutionOutcome& outcome);

bool IsSuccessfulReproduction(const std::optional<BehaviorSignature>& original,
                              const ExecutionOutcome& target, double threshold);

bool IsValid(const seeds::SeedCode& seed, const ExecutionOutcome& outcome, bool survived_dedup);

// ---- aggregation ---------------------------------------------------------------

struct BugTally {
  size_t total = 0;
  std::map<oracle::BugStatus, size_t> by_status;
  std::map<oracle::Cause, size_t> by_cause;
  std::map<oracle::Symptom, size_t> by_symptom;
};

struct LabelCounts {
  uint64_t his = 0;
  uint64_t suc = 0;
  std::set<std::string> suc_apis;
};

struct CampaignMetrics {
  uint64_t n_his = 0;
  uint64_t n_suc = 0;
  uint64_t n_all = 0;
  uint64_t n_val = 0;
  std::set<std::string> suc_apis;
  std::set<std::string> val_apis;
  std::set<std::string> tar_apis;
  std::map<std::string, LabelCounts> by_label;
  std::map<std::string, BugTally> bugs;  // per library, in name order
  std::vector<std::string> review;       // seeds needing a manual look
};

std::optional<Rational> SuccessRate(const CampaignMetrics& m);
std::optional<Rational> ValidityRate(const CampaignMetrics& m);
std::optional<Rational> ApiCoverage(const CampaignMetrics& m);
std::optional<Rational> ApiCoverage(const std::set<std::string>& suc,
                                    const std::set<std::string>& val,
                                    const std::set<std::string>& tar);

void TallyBugs(const std::vector<oracle::BugRecord>& bugs, CampaignMetrics* m);

struct MetricsInput {
  std::vector<seeds::SeedCode> seeds;  // after dedup
  std::vector<ExecutionOutcome> outcomes;
  uint64_t his_total = 0;              // historical bug codes fed to conversion
  uint64_t generated_total = 0;        // generated codes before dedup
  std::map<std::string, std::string> his_labels;  // bug code id -> issue label
  std::vector<std::string> target_apis;
  double threshold = oracle::kDefaultThreshold;
};

CampaignMetrics ComputeMetrics(const MetricsInput& input);

// ---- report ------------------------------------------------------------------------

struct Table {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string Markdown() const;
  // Cells joined by single spaces: "MLX 35 32 0 3".
  std::string PlainRow(size_t i) const;
};

// Rows per library plus a Total row. A Pending column appears only when some
// bug is neither confirmed nor rejected yet.
Table StatusTable(const CampaignMetrics& m);
Table CauseTable(const CampaignMetrics& m);
Table SymptomTable(const CampaignMetrics& m);
Table MetricTable(const CampaignMetrics& m);
Table LabelTable(const CampaignMetrics& m);
// "NI 62.83% (93/148)" style shares over all bugs, two truncated decimals.
std::vector<std::string> CauseShares(const CampaignMetrics& m);

void EmitReport(const fs::path& dir, const CampaignMetrics& m);

}  // namespace futur::metrics

#endif  // FUTUR_METRICS_H_
