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

#include "futur/metrics.h"

#include <algorithm>
#include <regex>
#include <sstream>

#include "json.hpp"

namespace futur::metrics {

using harness::CrashKind;
using harness::Status;
using json = nlohmann::json;
using oracle::BugStatus;
using oracle::Cause;
using oracle::Symptom;

bool operator==(const Rational& a, const Rational& b) {
  if (!a.defined() || !b.defined()) return a.defined() == b.defined();
  return static_cast<unsigned __int128>(a.num) * b.den ==
         static_cast<unsigned __int128>(b.num) * a.den;
}

std::string RenderPercent(const Rational& r, int precision, RoundMode mode) {
  if (!r.defined()) return "-";
  unsigned __int128 scale = 1;
  for (int i = 0; i < precision; ++i) scale *= 10;
  unsigned __int128 scaled = static_cast<unsigned __int128>(r.num) * 100 * scale;
  unsigned __int128 q = mode == RoundMode::kNearest ? (2 * scaled + r.den) / (2 * r.den)
                                                    : scaled / r.den;
  std::string out = std::to_string(static_cast<uint64_t>(q / scale));
  if (precision > 0) {
    std::string frac = std::to_string(static_cast<uint64_t>(q % scale));
    out += "." + std::string(precision - frac.size(), '0') + frac;
  }
  return out + "%";
}

std::string RenderRate(const Rational& r, int precision, RoundMode mode) {
  if (!r.defined()) return "-";
  return RenderPercent(r, precision, mode) + " (" + std::to_string(r.num) + "/" +
         std::to_string(r.den) + ")";
}

// ---- behavior signatures -----------------------------------------------------

std::string NormalizeErrorMessage(std::string_view message, size_t max_words) {
  static const std::regex kPath(R"((?:[A-Za-z]:)?[\w.~-]*(?:[/\\][\w.~-]+)+)");
  static const std::regex kHex(R"(0x[0-9a-fA-F]+)");
  static const std::regex kNumber(R"([-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)");
  std::string s(message);
  s = std::regex_replace(s, kPath, " ");
  s = std::regex_replace(s, kHex, " ");
  s = std::regex_replace(s, kNumber, " ");
  s = ToLower(s);
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(cur);
    cur.clear();
  };
  for (char c : s) {
    if (IsIdentChar(c)) {
      cur += c;
    } else {
      flush();
    }
    if (words.size() >= max_words) break;
  }
  flush();
  if (words.size() > max_words) words.resize(max_words);
  return Join(words, " ");
}

std::string BehaviorSignature::Describe() const {
  switch (kind) {
    case Kind::kCrash: return "crash:" + harness::CrashKindName(crash);
    case Kind::kError: return "error:" + error_type + ":" + error_words;
    case Kind::kOutputs: return "outputs:" + std::to_string(outputs.size());
  }
  return "";
}

std::optional<BehaviorSignature> SignatureFromOutcome(const ExecutionOutcome& outcome) {
  BehaviorSignature sig;
  switch (outcome.status) {
    case Status::kCrash:
      sig.kind = BehaviorSignature::Kind::kCrash;
      sig.crash = outcome.crash;
      return sig;
    case Status::kException:
      sig.kind = BehaviorSignature::Kind::kError;
      sig.error_type = outcome.error.type;
      sig.error_words = NormalizeErrorMessage(outcome.error.message);
      return sig;
    case Status::kOk:
      sig.kind = BehaviorSignature::Kind::kOutputs;
      sig.outputs = outcome.outputs;
      return sig;
    default:
      return std::nullopt;
  }
}

bool IsSuccessfulReproduction(const std::optional<BehaviorSignature>& original,
                              const ExecutionOutcome& target, double threshold) {
  if (!original) return false;
  switch (original->kind) {
    case BehaviorSignature::Kind::kCrash:
      return target.status == Status::kCrash && target.crash == original->crash;
    case BehaviorSignature::Kind::kError:
      return target.status == Status::kException && target.error.type == original->error_type &&
             NormalizeErrorMessage(target.error.message) == original->error_words;
    case BehaviorSignature::Kind::kOutputs: {
      if (target.status != Status::kOk) return false;
      if (target.outputs.size() != original->outputs.size()) return false;
      for (size_t i = 0; i < target.outputs.size(); ++i) {
        oracle::Distance d = oracle::EuclideanDistance(original->outputs[i], target.outputs[i]);
        if (d.structural) return false;
        if (d.value / (1.0 + oracle::FiniteNorm(original->outputs[i])) > threshold) return false;
      }
      return true;
    }
  }
  return false;
}

bool IsValid(const seeds::SeedCode& seed, const ExecutionOutcome& outcome, bool survived_dedup) {
  if (!survived_dedup || outcome.status != Status::kOk) return false;
  for (const std::string& api : outcome.api_calls_observed) {
    if (std::find(seed.target_apis.begin(), seed.target_apis.end(), api) != seed.target_apis.end())
      return true;
  }
  return false;
}

// ---- aggregation ---------------------------------------------------------------

std::optional<Rational> SuccessRate(const CampaignMetrics& m) {
  if (m.n_his == 0) return std::nullopt;
  return Rational{m.n_suc, m.n_his};
}

std::optional<Rational> ValidityRate(const CampaignMetrics& m) {
  if (m.n_all == 0) return std::nullopt;
  return Rational{m.n_val, m.n_all};
}

std::optional<Rational> ApiCoverage(const std::set<std::string>& suc,
                                    const std::set<std::string>& val,
                                    const std::set<std::string>& tar) {
  if (tar.empty()) return std::nullopt;
  uint64_t covered = 0;
  for (const std::string& api : tar) {
    if (suc.count(api) || val.count(api)) ++covered;
  }
  return Rational{covered, tar.size()};
}

std::optional<Rational> ApiCoverage(const CampaignMetrics& m) {
  return ApiCoverage(m.suc_apis, m.val_apis, m.tar_apis);
}

void TallyBugs(const std::vector<oracle::BugRecord>& bugs, CampaignMetrics* m) {
  for (const oracle::BugRecord& b : bugs) {
    BugTally& t = m->bugs[b.library];
    ++t.total;
    ++t.by_status[b.status];
    ++t.by_cause[b.cause];
    ++t.by_symptom[b.symptom];
  }
}

CampaignMetrics ComputeMetrics(const MetricsInput& input) {
  CampaignMetrics m;
  std::map<std::string, const ExecutionOutcome*> by_key;
  for (const ExecutionOutcome& o : input.outcomes) by_key[o.Key()] = &o;
  auto find = [&](const std::string& seed, const char* device, const char* role) {
    auto it = by_key.find(seed + "|" + device + "|" + role);
    return it == by_key.end() ? nullptr : it->second;
  };

  for (const auto& [id, label] : input.his_labels) ++m.by_label[label].his;
  m.n_his = input.his_total ? input.his_total : input.his_labels.size();
  m.tar_apis.insert(input.target_apis.begin(), input.target_apis.end());

  uint64_t gen_seen = 0;
  for (const seeds::SeedCode& seed : input.seeds) {
    const ExecutionOutcome* target = find(seed.id, "cpu", "target");
    if (seed.kind == seeds::Kind::kPot) {
      const ExecutionOutcome* source = find(seed.id, "cpu", "source");
      std::optional<BehaviorSignature> sig;
      if (source) sig = SignatureFromOutcome(*source);
      if (!sig || !target) {
        m.review.push_back(seed.id + ": no " + (sig ? "target outcome" : "behavior signature"));
        continue;
      }
      if (!IsSuccessfulReproduction(sig, *target, input.threshold)) continue;
      ++m.n_suc;
      m.suc_apis.insert(seed.target_apis.begin(), seed.target_apis.end());
      auto label = input.his_labels.find(seed.origin);
      LabelCounts& lc = m.by_label[label == input.his_labels.end() ? "unlabeled" : label->second];
      ++lc.suc;
      lc.suc_apis.insert(seed.target_apis.begin(), seed.target_apis.end());
    } else {
      ++gen_seen;
      if (target && IsValid(seed, *target, true)) {
        ++m.n_val;
        m.val_apis.insert(seed.target_apis.begin(), seed.target_apis.end());
      }
    }
  }
  m.n_all = std::max<uint64_t>(input.generated_total, gen_seen);
  return m;
}

// ---- report ------------------------------------------------------------------------

std::string Table::Markdown() const {
  std::string out = "### " + title + "\n\n| " + Join(header, " | ") + " |\n|";
  for (size_t i = 0; i < header.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& row : rows) out += "| " + Join(row, " | ") + " |\n";
  return out;
}

std::string Table::PlainRow(size_t i) const { return Join(rows.at(i), " "); }

namespace {

template <typename Key>
size_t Count(const std::map<Key, size_t>& m, Key k) {
  auto it = m.find(k);
  return it == m.end() ? 0 : it->second;
}

// Per-library rows of `columns(tally)` plus a Total row of column sums.
template <typename Fn>
void FillRows(const CampaignMetrics& m, Table* t, Fn columns) {
  std::vector<size_t> total;
  for (const auto& [lib, tally] : m.bugs) {
    std::vector<size_t> cells = columns(tally);
    if (total.empty()) total.assign(cells.size(), 0);
    std::vector<std::string> row{lib};
    for (size_t i = 0; i < cells.size(); ++i) {
      total[i] += cells[i];
      row.push_back(std::to_string(cells[i]));
    }
    t->rows.push_back(row);
  }
  if (total.empty()) total.assign(t->header.size() - 1, 0);
  std::vector<std::string> row{"Total"};
  for (size_t v : total) row.push_back(std::to_string(v));
  t->rows.push_back(row);
}

size_t Pending(const BugTally& t) {
  return Count(t.by_status, BugStatus::kPotential) + Count(t.by_status, BugStatus::kReported);
}

size_t Unclassified(const BugTally& t) { return Count(t.by_cause, Cause::kUnclassified); }

}  // namespace

Table StatusTable(const CampaignMetrics& m) {
  bool pending = false;
  for (const auto& [lib, t] : m.bugs) pending = pending || Pending(t) > 0;
  Table t;
  t.title = "Bugs by status";
  t.header = {"Library", "Total", "Confirmed Unknown", "Confirmed Known", "Won't fix"};
  if (pending) t.header.push_back("Pending");
  FillRows(m, &t, [&](const BugTally& b) {
    std::vector<size_t> c{b.total, Count(b.by_status, BugStatus::kConfirmedUnknown),
                          Count(b.by_status, BugStatus::kConfirmedKnown),
                          Count(b.by_status, BugStatus::kWontFix)};
    if (pending) c.push_back(Pending(b));
    return c;
  });
  return t;
}

Table CauseTable(const CampaignMetrics& m) {
  bool unclassified = false;
  for (const auto& [lib, t] : m.bugs) unclassified = unclassified || Unclassified(t) > 0;
  Table t;
  t.title = "Bugs by cause";
  t.header = {"Library", "Total", "EC", "NI", "LD", "DBI", "MPC"};
  if (unclassified) t.header.push_back("Unclassified");
  FillRows(m, &t, [&](const BugTally& b) {
    std::vector<size_t> c{b.total};
    for (Cause k : {Cause::kEC, Cause::kNI, Cause::kLD, Cause::kDBI, Cause::kMPC})
      c.push_back(Count(b.by_cause, k));
    if (unclassified) c.push_back(Unclassified(b));
    return c;
  });
  return t;
}

Table SymptomTable(const CampaignMetrics& m) {
  Table t;
  t.title = "Bugs by symptom";
  t.header = {"Library", "Total", "Crash", "CPU/GPU", "Src libs/Tar libs"};
  FillRows(m, &t, [&](const BugTally& b) {
    return std::vector<size_t>{b.total, Count(b.by_symptom, Symptom::kCrash),
                               Count(b.by_symptom, Symptom::kCpuGpu),
                               Count(b.by_symptom, Symptom::kSrcTar)};
  });
  return t;
}

namespace {
std::string Render(const std::optional<Rational>& r) { return RenderRate(r.value_or(Rational{})); }
}  // namespace

Table MetricTable(const CampaignMetrics& m) {
  Table t;
  t.title = "Campaign metrics";
  t.header = {"Metric", "Value"};
  t.rows.push_back({"Success Rate", Render(SuccessRate(m))});
  t.rows.push_back({"Validity Rate", Render(ValidityRate(m))});
  t.rows.push_back({"API Coverage", Render(ApiCoverage(m))});
  return t;
}

Table LabelTable(const CampaignMetrics& m) {
  Table t;
  t.title = "Historical bug codes by label";
  t.header = {"Issue Label", "Success Rate", "API Coverage"};
  for (const auto& [label, lc] : m.by_label) {
    std::optional<Rational> rate;
    if (lc.his) rate = Rational{lc.suc, lc.his};
    t.rows.push_back({label, Render(rate), Render(ApiCoverage(lc.suc_apis, {}, m.tar_apis))});
  }
  return t;
}

std::vector<std::string> CauseShares(const CampaignMetrics& m) {
  std::map<Cause, size_t> counts;
  uint64_t total = 0;
  for (const auto& [lib, t] : m.bugs) {
    total += t.total;
    for (const auto& [c, n] : t.by_cause) counts[c] += n;
  }
  std::vector<std::string> out;
  for (Cause c : {Cause::kNI, Cause::kMPC, Cause::kEC, Cause::kDBI, Cause::kLD, Cause::kUnclassified}) {
    if (!counts[c]) continue;
    out.push_back(oracle::CauseName(c) + " " +
                  RenderRate(Rational{counts[c], total}, 2, RoundMode::kTruncate));
  }
  return out;
}

void EmitReport(const fs::path& dir, const CampaignMetrics& m) {
  std::vector<Table> tables{StatusTable(m), CauseTable(m), SymptomTable(m), MetricTable(m),
                            LabelTable(m)};
  std::string md = "# Campaign report\n\n";
  for (const Table& t : tables) md += t.Markdown() + "\n";
  std::vector<std::string> shares = CauseShares(m);
  if (!shares.empty()) {
    md += "### Cause shares\n\n";
    for (const std::string& s : shares) md += "- " + s + "\n";
    md += "\n";
  }
  if (!m.review.empty()) {
    md += "### Needs review\n\n";
    for (const std::string& s : m.review) md += "- " + s + "\n";
  }
  WriteFileAtomic(dir / "tables.md", md);

  std::string tsv = "key\tvalue\n";
  auto put = [&](const std::string& k, const std::string& v) { tsv += k + "\t" + v + "\n"; };
  put("n_his", std::to_string(m.n_his));
  put("n_suc", std::to_string(m.n_suc));
  put("n_all", std::to_string(m.n_all));
  put("n_val", std::to_string(m.n_val));
  put("suc_apis", std::to_string(m.suc_apis.size()));
  put("val_apis", std::to_string(m.val_apis.size()));
  put("tar_apis", std::to_string(m.tar_apis.size()));
  put("success_rate", Render(SuccessRate(m)));
  put("validity_rate", Render(ValidityRate(m)));
  put("api_coverage", Render(ApiCoverage(m)));
  for (const Table& t : {tables[0], tables[1], tables[2]}) {
    for (const auto& row : t.rows) {
      for (size_t i = 1; i < row.size(); ++i) put(row[0] + "." + t.header[i], row[i]);
    }
  }
  WriteFileAtomic(dir / "summary.tsv", tsv);

  std::string nd;
  auto rate = [&](const char* name, const std::optional<Rational>& r) {
    json j{{"record", "rate"}, {"name", name}};
    if (r) {
      j["num"] = r->num;
      j["den"] = r->den;
    } else {
      j["num"] = nullptr;
      j["den"] = nullptr;
    }
    nd += j.dump() + "\n";
  };
  rate("success_rate", SuccessRate(m));
  rate("validity_rate", ValidityRate(m));
  rate("api_coverage", ApiCoverage(m));
  for (const auto& [label, lc] : m.by_label) {
    nd += json{{"record", "label"}, {"label", label}, {"his", lc.his}, {"suc", lc.suc},
               {"suc_apis", lc.suc_apis}}.dump() + "\n";
  }
  for (const auto& [lib, t] : m.bugs) {
    json status = json::object(), cause = json::object(), symptom = json::object();
    for (const auto& [k, n] : t.by_status) status[oracle::BugStatusName(k)] = n;
    for (const auto& [k, n] : t.by_cause) cause[oracle::CauseName(k)] = n;
    for (const auto& [k, n] : t.by_symptom) symptom[oracle::SymptomName(k)] = n;
    nd += json{{"record", "bugs"}, {"library", lib}, {"total", t.total}, {"status", status},
               {"cause", cause}, {"symptom", symptom}}.dump() + "\n";
  }
  WriteFileAtomic(dir / "metrics.ndrec", nd);
}

}  // namespace futur::metrics
