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

#include "futur/oracle.h"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include "futur/pairs.h"
#include "futur/pysyntax.h"
#include "json.hpp"

namespace futur::oracle {

using harness::CrashKindName;
using harness::Status;
using json = nlohmann::json;

Distance EuclideanDistance(const NumericCapture& a, const NumericCapture& b) {
  Distance d;
  if (a.shape != b.shape || a.values.size() != b.values.size()) {
    d.structural = true;
    d.mismatch = "shape";
    return d;
  }
  // Scaled accumulation so that differences near the double range do not
  // overflow the sum of squares.
  double scale = 0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    double x = a.values[i];
    double y = b.values[i];
    bool xn = std::isnan(x), yn = std::isnan(y);
    if (xn || yn) {
      if (xn && yn) continue;
      d.structural = true;
      d.mismatch = "nan_mismatch";
      return d;
    }
    bool xi = std::isinf(x), yi = std::isinf(y);
    if (xi || yi) {
      if (xi && yi && x == y) continue;
      d.structural = true;
      d.mismatch = "inf_mismatch";
      return d;
    }
    scale = std::max(scale, std::fabs(x - y));
  }
  if (scale == 0 || std::isinf(scale)) {
    d.value = scale;
    return d;
  }
  double sum = 0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    double x = a.values[i];
    double y = b.values[i];
    if (std::isnan(x) || std::isinf(x)) continue;
    double r = (x - y) / scale;
    sum += r * r;
  }
  d.value = scale * std::sqrt(sum);
  return d;
}

double FiniteNorm(const NumericCapture& a) {
  double scale = 0;
  for (double v : a.values) {
    if (std::isfinite(v)) scale = std::max(scale, std::fabs(v));
  }
  if (scale == 0) return 0;
  double sum = 0;
  for (double v : a.values) {
    if (std::isfinite(v)) sum += (v / scale) * (v / scale);
  }
  return scale * std::sqrt(sum);
}

std::string SymptomName(Symptom s) {
  switch (s) {
    case Symptom::kCrash: return "crash";
    case Symptom::kCpuGpu: return "cpu_gpu";
    case Symptom::kSrcTar: return "src_tar";
  }
  return "?";
}

Symptom SymptomFromName(const std::string& s) {
  for (Symptom x : {Symptom::kCrash, Symptom::kCpuGpu, Symptom::kSrcTar}) {
    if (SymptomName(x) == s) return x;
  }
  throw ParseError("unknown symptom: " + s);
}

std::string VerdictKindName(VerdictKind k) {
  switch (k) {
    case VerdictKind::kConsistent: return "consistent";
    case VerdictKind::kPotentialBug: return "potential_bug";
    case VerdictKind::kUndefined: return "undefined";
  }
  return "?";
}

std::string Verdict::Label() const {
  if (kind == VerdictKind::kPotentialBug) return "potential_bug(" + SymptomName(symptom) + ")";
  return VerdictKindName(kind);
}

namespace {

bool Unusable(const ExecutionOutcome& o) {
  return o.status == Status::kProtocolError || o.status == Status::kDeviceUnavailable;
}

Verdict Compare(const ExecutionOutcome& ref, const ExecutionOutcome& other,
                const CompareOptions& options, Symptom symptom, bool libraries) {
  Verdict v;
  v.symptom = symptom;
  v.threshold = options.threshold;
  if (Unusable(ref) || Unusable(other)) {
    v.kind = VerdictKind::kUndefined;
    v.details = "unusable outcome: " + ref.StatusLabel() + " vs " + other.StatusLabel();
    return v;
  }
  bool ref_crash = ref.status == Status::kCrash;
  bool other_crash = other.status == Status::kCrash;
  if (libraries && ref_crash && !other_crash) {
    v.kind = VerdictKind::kUndefined;
    v.details = "source outcome crashed: " + ref.StatusLabel();
    return v;
  }
  if (ref_crash || other_crash) {
    const ExecutionOutcome& c = (ref_crash && !libraries) ? ref : other;
    v.kind = VerdictKind::kPotentialBug;
    v.symptom = Symptom::kCrash;
    v.structural = true;
    v.signature = "crash:" + CrashKindName(c.crash);
    if (c.crash == harness::CrashKind::kOtherSignal) v.signature += std::to_string(c.signal);
    v.details = c.StatusLabel() + " on " + harness::DeviceName(c.device) + " (" + c.role + ")";
    return v;
  }
  if (ref.status != other.status) {
    v.kind = VerdictKind::kPotentialBug;
    v.structural = true;
    v.signature = "status:" + harness::StatusName(ref.status) + "/" + harness::StatusName(other.status);
    v.details = ref.StatusLabel() + " vs " + other.StatusLabel();
    return v;
  }
  if (ref.status == Status::kException) {
    if (options.strict_exception_types && ref.error.type != other.error.type) {
      v.kind = VerdictKind::kPotentialBug;
      v.structural = true;
      v.signature = "exception_type";
      v.details = ref.error.type + " vs " + other.error.type;
      return v;
    }
    v.kind = VerdictKind::kConsistent;
    v.details = "both raised";
    return v;
  }
  if (ref.outputs.size() != other.outputs.size()) {
    v.kind = VerdictKind::kPotentialBug;
    v.structural = true;
    v.signature = "output_count";
    v.details = std::to_string(ref.outputs.size()) + " vs " + std::to_string(other.outputs.size()) +
                " outputs";
    return v;
  }
  for (size_t i = 0; i < ref.outputs.size(); ++i) {
    Distance d = EuclideanDistance(ref.outputs[i], other.outputs[i]);
    if (d.structural) {
      v.kind = VerdictKind::kPotentialBug;
      v.structural = true;
      v.signature = d.mismatch;
      v.details = "output " + ref.outputs[i].name + ": " + d.mismatch;
      return v;
    }
    double normalized = d.value / (1.0 + FiniteNorm(ref.outputs[i]));
    if (normalized > v.distance) {
      v.distance = normalized;
      v.details = "output " + ref.outputs[i].name + ": normalized distance " + FormatDouble(normalized);
    }
  }
  if (v.distance > options.threshold) {
    v.kind = VerdictKind::kPotentialBug;
    v.signature = "distance";
  } else {
    v.kind = VerdictKind::kConsistent;
  }
  return v;
}

}  // namespace

Verdict CompareBackends(const ExecutionOutcome& cpu, const ExecutionOutcome& gpu,
                        const CompareOptions& options) {
  return Compare(cpu, gpu, options, Symptom::kCpuGpu, false);
}

Verdict CompareLibraries(const ExecutionOutcome& source, const ExecutionOutcome& target,
                         const CompareOptions& options) {
  return Compare(source, target, options, Symptom::kSrcTar, true);
}

SeedVerdicts EvaluateSeed(const ExecutionOutcome* cpu, const ExecutionOutcome* gpu,
                          const ExecutionOutcome* source, const CompareOptions& options) {
  SeedVerdicts out;
  if (!cpu) {
    out.note = "no cpu outcome";
    return out;
  }
  bool gate = false;
  if (gpu && gpu->status != Status::kDeviceUnavailable) {
    out.backends = CompareBackends(*cpu, *gpu, options);
    gate = out.backends->kind == VerdictKind::kConsistent;
  } else {
    out.note = "gpu outcome unavailable";
    if (cpu->status == Status::kCrash) {
      Verdict v;
      v.kind = VerdictKind::kPotentialBug;
      v.symptom = Symptom::kCrash;
      v.structural = true;
      v.threshold = options.threshold;
      v.signature = "crash:" + CrashKindName(cpu->crash);
      v.details = cpu->StatusLabel() + " on cpu (target)";
      out.backends = v;
    } else {
      gate = cpu->status != Status::kProtocolError;
    }
  }
  if (!source) {
    if (!out.note.empty()) out.note += "; ";
    out.note += "no source outcome";
  } else if (gate) {
    out.libraries = CompareLibraries(*source, *cpu, options);
  }
  return out;
}

// ---- evidence --------------------------------------------------------------

namespace {

bool IsIdentifier(std::string_view s) {
  if (s.empty() || !IsIdentStart(s[0])) return false;
  return std::all_of(s.begin(), s.end(), IsIdentChar);
}

// Rewrites `alias.attr` chains to their imported module names.
std::string QualifyText(const py::Module& m, const std::string& text) {
  std::vector<py::Token> toks;
  try {
    toks = py::Tokenize(text);
  } catch (const ParseError&) {
    return text;
  }
  std::string out;
  size_t last = 0;
  for (size_t i = 0; i < toks.size(); ++i) {
    const py::Token& t = toks[i];
    if (t.kind != py::TokKind::kName) continue;
    if (i > 0 && toks[i - 1].kind == py::TokKind::kOp && toks[i - 1].text == ".") continue;
    if (i + 1 >= toks.size() || toks[i + 1].text != ".") continue;
    for (const py::ImportBinding& b : m.imports) {
      if (b.local == t.text && b.module != t.text) {
        out += text.substr(last, t.begin - last) + b.module;
        last = t.end;
        break;
      }
    }
  }
  return out + text.substr(last);
}

std::string ResolveArg(const py::Module& m, size_t stmt, const std::string& text) {
  std::string t(Trim(text));
  if (IsIdentifier(t)) {
    std::regex assign("^\\s*" + t + "\\s*=(?!=)([\\s\\S]*)$");
    for (size_t s = stmt; s-- > 0;) {
      if (!m.statements[s].kills.count(t)) continue;
      std::smatch match;
      std::string st = m.StatementText(s);
      if (std::regex_match(st, match, assign)) t = std::string(Trim(match[1].str()));
      break;
    }
  }
  return QualifyText(m, t);
}

struct Num {
  double value;
  bool is_int;
};

std::vector<Num> Numbers(const std::string& text) {
  std::vector<Num> out;
  bool whole_int = false;
  if (std::optional<double> v = py::EvalNumeric(Trim(text), &whole_int)) {
    out.push_back({*v, whole_int});
    return out;
  }
  std::vector<py::Token> toks;
  try {
    toks = py::Tokenize(text);
  } catch (const ParseError&) {
    return out;
  }
  for (size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].kind != py::TokKind::kNumber) continue;
    bool is_int = false;
    std::optional<double> v = py::EvalNumeric(toks[i].text, &is_int);
    if (!v) continue;
    bool negative = false;
    if (i > 0 && toks[i - 1].kind == py::TokKind::kOp && toks[i - 1].text == "-") {
      negative = i == 1 || (toks[i - 2].kind == py::TokKind::kOp && toks[i - 2].text != ")" &&
                            toks[i - 2].text != "]");
    }
    out.push_back({negative ? -*v : *v, is_int});
  }
  return out;
}

constexpr double kInt32Max = 2147483647.0;

bool IsBoundary(const Num& n) {
  static const double kInts[] = {32767.0, -32768.0, 65535.0, 2147483647.0, -2147483648.0,
                                 4294967295.0, 9223372036854775807.0, -9223372036854775808.0};
  static const double kFloats[] = {65504.0, 3.4028234663852886e38, 1.7976931348623157e308,
                                   1.1754943508222875e-38, 2.2250738585072014e-308,
                                   1.401298464324817e-45, 4.9406564584124654e-324};
  if (n.is_int) return std::find(std::begin(kInts), std::end(kInts), n.value) != std::end(kInts);
  double a = std::fabs(n.value);
  return std::find(std::begin(kFloats), std::end(kFloats), a) != std::end(kFloats);
}

bool HasWord(const std::string& text, const char* pattern) {
  return std::regex_search(text, std::regex(pattern, std::regex::icase));
}

bool ContainsNan(const std::string& text) {
  return HasWord(text, "(^|[^A-Za-z0-9_])nan([^A-Za-z0-9_]|$)");
}

bool ContainsInf(const std::string& text) {
  return HasWord(text, "(^|[^A-Za-z0-9_])(inf|infinity)([^A-Za-z0-9_]|$)");
}

}  // namespace

std::vector<CallEvidence> ExtractCallEvidence(const std::string& code,
                                              const std::string& target_library) {
  std::vector<CallEvidence> out;
  py::Module m;
  try {
    m = py::Parse(code);
  } catch (const py::SyntaxError&) {
    return out;
  }
  std::set<std::string> roots = pairs::LibraryRoots(target_library);
  for (const py::CallSite& c : m.calls) {
    if (c.callee.empty()) continue;
    std::string q = m.Qualify(c.callee);
    if (!roots.count(q.substr(0, q.find('.')))) continue;
    CallEvidence ce;
    ce.api = q;
    for (const py::Argument& a : c.args) {
      ArgEvidence ae;
      ae.role = a.keyword.empty() ? "arg" + std::to_string(a.position) : "kw:" + a.keyword;
      ae.text = a.text;
      ae.resolved = ResolveArg(m, c.stmt, a.text);
      ce.args.push_back(std::move(ae));
    }
    out.push_back(std::move(ce));
  }
  return out;
}

std::string CauseName(Cause c) {
  switch (c) {
    case Cause::kNI: return "NI";
    case Cause::kMPC: return "MPC";
    case Cause::kEC: return "EC";
    case Cause::kDBI: return "DBI";
    case Cause::kLD: return "LD";
    case Cause::kUnclassified: return "unclassified";
  }
  return "?";
}

Cause CauseFromName(const std::string& s) {
  for (Cause c : {Cause::kNI, Cause::kMPC, Cause::kEC, Cause::kDBI, Cause::kLD,
                  Cause::kUnclassified}) {
    if (CauseName(c) == s) return c;
  }
  throw ParseError("unknown cause: " + s);
}

bool ContainsNanOrInf(const std::string& text) {
  if (ContainsNan(text) || ContainsInf(text)) return true;
  for (const Num& n : Numbers(text)) {
    if (std::isinf(n.value)) return true;  // overflowing literal such as 1e400
  }
  return false;
}

bool ContainsBoundaryValue(const std::string& text) {
  for (const Num& n : Numbers(text)) {
    if (IsBoundary(n)) return true;
  }
  return false;
}

bool ContainsOutOfDomainInt(const std::string& text) {
  for (const Num& n : Numbers(text)) {
    if (n.is_int && (n.value < 0 || std::fabs(n.value) > kInt32Max)) return true;
  }
  return false;
}

Cause ClassifyCause(const Evidence& e) {
  if (e.manual_override) return *e.manual_override;
  std::vector<std::string> inputs;
  for (const CallEvidence& c : e.calls) {
    for (const ArgEvidence& a : c.args) inputs.push_back(a.resolved.empty() ? a.text : a.resolved);
  }
  auto any = [&](bool (*pred)(const std::string&)) {
    return std::any_of(inputs.begin(), inputs.end(), pred);
  };
  if (any(ContainsNanOrInf)) return Cause::kNI;
  if (any(ContainsBoundaryValue)) return Cause::kEC;
  bool misbehaved = e.symptom == Symptom::kCrash || e.wrong_result;
  if (misbehaved && any(ContainsOutOfDomainInt)) return Cause::kMPC;
  if (e.symptom == Symptom::kCpuGpu) return Cause::kDBI;
  return Cause::kUnclassified;
}

// ---- bug records -----------------------------------------------------------

std::string BugStatusName(BugStatus s) {
  switch (s) {
    case BugStatus::kPotential: return "potential";
    case BugStatus::kReported: return "reported";
    case BugStatus::kConfirmedUnknown: return "confirmed_unknown";
    case BugStatus::kConfirmedKnown: return "confirmed_known";
    case BugStatus::kWontFix: return "wont_fix";
  }
  return "?";
}

BugStatus BugStatusFromName(const std::string& s) {
  for (BugStatus b : {BugStatus::kPotential, BugStatus::kReported, BugStatus::kConfirmedUnknown,
                      BugStatus::kConfirmedKnown, BugStatus::kWontFix}) {
    if (BugStatusName(b) == s) return b;
  }
  throw ParseError("unknown bug status: " + s);
}

bool CanTransition(BugStatus from, BugStatus to) {
  if (from == BugStatus::kPotential) return to == BugStatus::kReported;
  if (from == BugStatus::kReported) {
    return to == BugStatus::kConfirmedUnknown || to == BugStatus::kConfirmedKnown ||
           to == BugStatus::kWontFix;
  }
  return false;
}

std::string BugRecord::DedupKey() const {
  return library + "|" + SymptomName(symptom) + "|" + api + "|" + CauseName(cause) + "|" + signature;
}

void BugRecord::Advance(BugStatus to) {
  if (!CanTransition(status, to)) {
    throw Error("bug " + id + ": cannot move from " + BugStatusName(status) + " to " +
                BugStatusName(to));
  }
  status = to;
}

std::vector<BugRecord> DedupBugs(const std::vector<BugRecord>& records) {
  std::vector<BugRecord> out;
  std::map<std::string, size_t> first;
  for (const BugRecord& r : records) {
    auto [it, fresh] = first.emplace(r.DedupKey(), out.size());
    if (fresh) {
      out.push_back(r);
    } else {
      out[it->second].duplicates.push_back(r.id);
    }
  }
  return out;
}

void WriteBugLedger(const fs::path& path, const std::vector<BugRecord>& bugs) {
  std::string out =
      "id\tseed\tlibrary\tapi\tsymptom\tcause\tstatus\tdedup_key\tsignature\tevidence\tduplicates\t"
      "details\n";
  for (const BugRecord& b : bugs) {
    std::vector<std::string> cols = {b.id,
                                     b.seed_id,
                                     b.library,
                                     b.api,
                                     SymptomName(b.symptom),
                                     CauseName(b.cause),
                                     BugStatusName(b.status),
                                     b.DedupKey(),
                                     b.signature,
                                     Join(b.evidence, ","),
                                     Join(b.duplicates, ","),
                                     b.details};
    for (std::string& c : cols) c = TsvEscape(c);
    out += Join(cols, "\t") + "\n";
  }
  WriteFileAtomic(path, out);
}

std::vector<BugRecord> ReadBugLedger(const fs::path& path) {
  std::vector<BugRecord> out;
  std::vector<std::string> lines = SplitLines(ReadFile(path));
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> c = Split(lines[i], '\t');
    if (c.size() != 12) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": expected 12 columns");
    }
    for (std::string& s : c) s = TsvUnescape(s);
    BugRecord b;
    b.id = c[0];
    b.seed_id = c[1];
    b.library = c[2];
    b.api = c[3];
    b.symptom = SymptomFromName(c[4]);
    b.cause = CauseFromName(c[5]);
    b.status = BugStatusFromName(c[6]);
    b.signature = c[8];
    for (const std::string& e : Split(c[9], ',')) {
      if (!e.empty()) b.evidence.push_back(e);
    }
    for (const std::string& d : Split(c[10], ',')) {
      if (!d.empty()) b.duplicates.push_back(d);
    }
    b.details = c[11];
    out.push_back(std::move(b));
  }
  return out;
}

// ---- patterns --------------------------------------------------------------

std::string ValueClassName(ValueClass v) {
  switch (v) {
    case ValueClass::kNan: return "nan";
    case ValueClass::kInf: return "inf";
    case ValueClass::kHugeInt: return "huge_int";
    case ValueClass::kNegativeDim: return "negative_dim";
    case ValueClass::kZero: return "zero";
    case ValueClass::kBoundary: return "boundary";
    case ValueClass::kConcrete: return "concrete";
  }
  return "?";
}

ValueClass ValueClassFromName(const std::string& s) {
  for (ValueClass v : {ValueClass::kNan, ValueClass::kInf, ValueClass::kHugeInt,
                       ValueClass::kNegativeDim, ValueClass::kZero, ValueClass::kBoundary,
                       ValueClass::kConcrete}) {
    if (ValueClassName(v) == s) return v;
  }
  throw ParseError("unknown value class: " + s);
}

bool InputPattern::IsPattern() const {
  return std::any_of(args.begin(), args.end(),
                     [](const PatternArg& a) { return a.value_class != ValueClass::kConcrete; });
}

ValueClass ClassifyValue(const std::string& text) {
  if (ContainsNan(text)) return ValueClass::kNan;
  std::vector<Num> nums = Numbers(text);
  if (ContainsInf(text) ||
      std::any_of(nums.begin(), nums.end(), [](const Num& n) { return std::isinf(n.value); })) {
    return ValueClass::kInf;
  }
  for (const Num& n : nums) {
    if (n.is_int && std::fabs(n.value) > kInt32Max) return ValueClass::kHugeInt;
  }
  for (const Num& n : nums) {
    if (n.is_int && n.value < 0) return ValueClass::kNegativeDim;
  }
  for (const Num& n : nums) {
    if (IsBoundary(n)) return ValueClass::kBoundary;
  }
  return ValueClass::kConcrete;
}

namespace {

size_t SkipString(const std::string& s, size_t i) {
  char q = s[i];
  size_t j = s.find(q, i + 1);
  return j == std::string::npos ? s.size() : j + 1;
}

size_t SkipParens(const std::string& s, size_t i) {
  int depth = 0;
  for (; i < s.size(); ++i) {
    if (s[i] == '\'' || s[i] == '"') {
      i = SkipString(s, i) - 1;
    } else if (s[i] == '(') {
      ++depth;
    } else if (s[i] == ')' && --depth == 0) {
      return i + 1;
    }
  }
  return s.size();
}

// s[i] == '['; records the element count of the first list seen per depth.
size_t ScanList(const std::string& s, size_t i, size_t depth, std::map<size_t, size_t>& dims) {
  ++i;
  size_t items = 0;
  bool content = false;
  while (i < s.size()) {
    char c = s[i];
    if (c == ']') {
      if (content) ++items;
      dims.emplace(depth, items);
      return i + 1;
    }
    if (c == '[') {
      i = ScanList(s, i, depth + 1, dims);
      content = true;
    } else if (c == ',') {
      ++items;
      content = false;
      ++i;
    } else if (c == '(') {
      i = SkipParens(s, i);
      content = true;
    } else if (c == '\'' || c == '"') {
      i = SkipString(s, i);
      content = true;
    } else {
      if (!std::isspace(static_cast<unsigned char>(c))) content = true;
      ++i;
    }
  }
  dims.emplace(depth, items);
  return i;
}

size_t TupleArity(const std::string& s) {
  size_t items = 0;
  bool content = false;
  int depth = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '(' || c == '[') {
      if (depth++ > 0) content = true;
    } else if (c == ')' || c == ']') {
      --depth;
    } else if (c == ',' && depth == 1) {
      ++items;
      content = false;
    } else if (depth >= 1 && !std::isspace(static_cast<unsigned char>(c))) {
      content = true;
    }
  }
  return items + (content ? 1 : 0);
}

std::vector<size_t> ArrayDims(const std::string& shape_class) {
  std::vector<size_t> dims;
  size_t open = shape_class.find('[');
  if (open == std::string::npos) return dims;
  for (const std::string& d :
       Split(shape_class.substr(open + 1, shape_class.size() - open - 2), 'x')) {
    dims.push_back(std::stoul(d));
  }
  return dims;
}

}  // namespace

std::string ShapeClass(const std::string& text) {
  size_t bracket = text.find('[');
  if (bracket != std::string::npos) {
    std::map<size_t, size_t> dims;
    ScanList(text, bracket, 0, dims);
    std::vector<std::string> parts;
    for (const auto& [depth, n] : dims) parts.push_back(std::to_string(n));
    return "array[" + Join(parts, "x") + "]";
  }
  std::string_view t = Trim(text);
  if (StartsWith(t, "(")) return "tuple[" + std::to_string(TupleArity(std::string(t))) + "]";
  return "scalar";
}

InputPattern ExtractBugPattern(const BugRecord& bug, const CallEvidence& call) {
  if (call.args.empty()) {
    throw UnextractableError("bug " + bug.id + ": call to " + call.api + " has no arguments");
  }
  InputPattern p;
  p.api = call.api;
  p.source_bugs = {bug.id};
  for (const ArgEvidence& a : call.args) {
    PatternArg pa;
    pa.role = a.role;
    pa.concrete = a.resolved.empty() ? a.text : a.resolved;
    pa.shape_class = ShapeClass(pa.concrete);
    pa.value_class = ClassifyValue(pa.concrete);
    p.args.push_back(std::move(pa));
  }
  return p;
}

std::string PatternToLine(const InputPattern& p) {
  json j;
  j["api"] = p.api;
  j["args"] = json::array();
  for (const PatternArg& a : p.args) {
    j["args"].push_back({{"role", a.role},
                         {"shape_class", a.shape_class},
                         {"value_class", ValueClassName(a.value_class)},
                         {"concrete", a.concrete}});
  }
  j["source_bugs"] = p.source_bugs;
  j["needs_review"] = p.needs_review;
  return j.dump();
}

InputPattern PatternFromLine(std::string_view line) {
  InputPattern p;
  try {
    json j = json::parse(line);
    p.api = j.at("api").get<std::string>();
    for (const json& a : j.at("args")) {
      PatternArg pa;
      pa.role = a.at("role").get<std::string>();
      pa.shape_class = a.at("shape_class").get<std::string>();
      pa.value_class = ValueClassFromName(a.at("value_class").get<std::string>());
      pa.concrete = a.at("concrete").get<std::string>();
      p.args.push_back(std::move(pa));
    }
    p.source_bugs = j.at("source_bugs").get<std::vector<std::string>>();
    p.needs_review = j.at("needs_review").get<bool>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("pattern line: ") + e.what());
  }
  return p;
}

// ---- reverse-cycle testing ----------------------------------------------------

namespace {

std::string ToSource(const std::string& text, const BacktestOptions& o) {
  if (o.target_root.empty() || o.source_root.empty()) return text;
  return ReplaceAll(text, o.target_root + ".", o.source_root + ".");
}

std::string ArrayProbe(const std::vector<size_t>& dims, const std::string& special,
                       const BacktestOptions& o) {
  size_t n = 1;
  for (size_t d : dims) n *= d;
  n = std::max<size_t>(n, 1);
  std::vector<std::string> items(n, "1.0");
  items[0] = special;
  return o.array_constructor + "([" + Join(items, ", ") + "])";
}

// Replaces every negative integer literal with -1.
std::string NegativesToMinusOne(const std::string& text) {
  std::vector<py::Token> toks;
  try {
    toks = py::Tokenize(text);
  } catch (const ParseError&) {
    return "-1";
  }
  std::string out;
  size_t last = 0;
  for (size_t i = 1; i < toks.size(); ++i) {
    if (toks[i].kind != py::TokKind::kNumber || toks[i - 1].text != "-") continue;
    bool is_int = false;
    if (!py::EvalNumeric(toks[i].text, &is_int) || !is_int) continue;
    out += text.substr(last, toks[i].begin - last) + "1";
    last = toks[i].end;
  }
  return out + text.substr(last);
}

}  // namespace

std::vector<std::string> InstantiateProbes(const PatternArg& arg, const BacktestOptions& o) {
  bool array = StartsWith(arg.shape_class, "array");
  std::vector<size_t> dims = ArrayDims(arg.shape_class);
  switch (arg.value_class) {
    case ValueClass::kNan:
      if (array) return {ArrayProbe(dims, "float('nan')", o)};
      return {"float('nan')"};
    case ValueClass::kInf:
      if (array) return {ArrayProbe(dims, "float('inf')", o), ArrayProbe(dims, "float('-inf')", o)};
      return {"float('inf')", "float('-inf')"};
    case ValueClass::kHugeInt:
      return {"2147483648", "9223372036854775807", "100000000000000000000"};
    case ValueClass::kNegativeDim:
      return {ToSource(NegativesToMinusOne(arg.concrete), o)};
    case ValueClass::kBoundary: {
      std::vector<Num> nums = Numbers(arg.concrete);
      bool floats = std::any_of(nums.begin(), nums.end(), [](const Num& n) { return !n.is_int; });
      if (floats) return {"3.4028234663852886e+38", "-3.4028234663852886e+38"};
      return {"2147483647", "-2147483648"};
    }
    case ValueClass::kZero:
      return {"0"};
    case ValueClass::kConcrete:
      return {ToSource(arg.concrete, o)};
  }
  return {};
}

std::vector<ProbeSeed> RenderProbeSeeds(const InputPattern& pattern, const BacktestOptions& o,
                                        std::vector<std::string>* report) {
  if (!pattern.IsPattern()) {
    throw ConfigError("pattern for " + pattern.api + " has only concrete values");
  }
  auto mapped = o.api_map.find(pattern.api);
  if (mapped == o.api_map.end()) {
    if (report) report->push_back("skipped " + pattern.api + ": no source-library counterpart");
    return {};
  }
  std::vector<std::vector<std::string>> choices;
  for (const PatternArg& a : pattern.args) choices.push_back(InstantiateProbes(a, o));
  std::vector<ProbeSeed> out;
  std::vector<size_t> idx(choices.size(), 0);
  while (out.size() < o.max_probes_per_pattern) {
    std::vector<std::string> rendered;
    for (size_t i = 0; i < choices.size(); ++i) {
      const std::string& role = pattern.args[i].role;
      std::string value = choices[i][idx[i]];
      rendered.push_back(StartsWith(role, "kw:") ? role.substr(3) + "=" + value : value);
    }
    ProbeSeed p;
    p.target_api = pattern.api;
    p.source_api = mapped->second;
    p.text = o.import_line + "\n# CAPTURE: out\nout = " + p.source_api + "(" +
             Join(rendered, ", ") + ")\n";
    p.id = "probe_" + SanitizeName(p.source_api) + "_" + Sha256Hex(p.text).substr(0, 10);
    out.push_back(std::move(p));
    size_t k = 0;
    while (k < idx.size() && ++idx[k] == choices[k].size()) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return out;
}

// ---- campaign analysis -------------------------------------------------------

namespace {

// Generated seeds target their origin API. Converted seeds blame the last
// call to a known target API, which is where the captured result came from.
std::string FocalApi(const seeds::SeedCode& seed, const std::vector<CallEvidence>& calls) {
  if (seed.kind == seeds::Kind::kGen && !seed.origin.empty()) return seed.origin;
  for (auto it = calls.rbegin(); it != calls.rend(); ++it) {
    if (std::find(seed.target_apis.begin(), seed.target_apis.end(), it->api) !=
        seed.target_apis.end())
      return it->api;
  }
  if (!calls.empty()) return calls.back().api;
  return seed.target_apis.empty() ? "?" : seed.target_apis[0];
}

}  // namespace

AnalysisResult AnalyzeCampaign(const std::vector<seeds::SeedCode>& seeds,
                               const std::vector<ExecutionOutcome>& outcomes,
                               const CompareOptions& options) {
  std::map<std::string, const ExecutionOutcome*> by_key;
  for (const ExecutionOutcome& o : outcomes) by_key[o.Key()] = &o;
  auto find = [&](const std::string& seed, harness::Device d, const std::string& role) {
    ExecutionOutcome probe;
    probe.seed_id = seed;
    probe.device = d;
    probe.role = role;
    auto it = by_key.find(probe.Key());
    return it == by_key.end() ? nullptr : it->second;
  };

  AnalysisResult result;
  std::vector<BugRecord> raw;
  std::map<std::string, std::vector<CallEvidence>> calls_of;
  for (const seeds::SeedCode& seed : seeds) {
    const ExecutionOutcome* cpu = find(seed.id, harness::Device::kCpu, "target");
    const ExecutionOutcome* gpu = find(seed.id, harness::Device::kGpu, "target");
    const ExecutionOutcome* src = find(seed.id, harness::Device::kCpu, "source");
    SeedVerdicts sv = EvaluateSeed(cpu, gpu, src, options);
    if (!sv.note.empty()) result.log.push_back(seed.id + ": " + sv.note);
    std::vector<CallEvidence> calls = ExtractCallEvidence(seed.text, seed.target_library);
    calls_of[seed.id] = calls;
    for (const std::optional<Verdict>* v : {&sv.backends, &sv.libraries}) {
      if (!*v || !(*v)->potential_bug()) continue;
      BugRecord b;
      b.id = "B" + std::to_string(raw.size() + 1);
      b.seed_id = seed.id;
      b.library = seed.target_library;
      b.api = FocalApi(seed, calls);
      b.symptom = (*v)->symptom;
      b.signature = (*v)->signature;
      b.details = (*v)->details;
      for (const ExecutionOutcome* o : {cpu, gpu, src}) {
        if (o) b.evidence.push_back(o->Key());
      }
      Evidence e;
      e.symptom = b.symptom;
      e.wrong_result = b.symptom != Symptom::kCrash;
      e.calls = calls;
      b.cause = ClassifyCause(e);
      raw.push_back(std::move(b));
    }
    result.verdicts.emplace_back(seed.id, std::move(sv));
  }
  result.bugs = DedupBugs(raw);
  for (const BugRecord& b : result.bugs) {
    const std::vector<CallEvidence>& calls = calls_of[b.seed_id];
    auto call = std::find_if(calls.begin(), calls.end(),
                             [&](const CallEvidence& c) { return c.api == b.api; });
    if (call == calls.end()) {
      result.log.push_back(b.id + ": no call evidence for " + b.api);
      continue;
    }
    try {
      InputPattern p = ExtractBugPattern(b, *call);
      if (p.IsPattern()) {
        result.patterns.push_back(std::move(p));
      } else {
        result.log.push_back(b.id + ": arguments of " + b.api + " are all concrete");
      }
    } catch (const UnextractableError& e) {
      result.log.push_back(e.what());
    }
  }
  return result;
}

}  // namespace futur::oracle
