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

#include "futur/prompt.h"

#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "futur/pysyntax.h"

namespace futur::prompt {

size_t EstimateTokens(std::string_view text) { return (text.size() + 3) / 4; }

std::string LibraryDisplayName(const std::string& id) {
  static const std::map<std::string, std::string> kNames = {
      {"mlx", "MLX"},          {"mindspore", "MindSpore"},   {"oneflow", "OneFlow"},
      {"pytorch", "PyTorch"},  {"torch", "PyTorch"},         {"tensorflow", "TensorFlow"},
      {"jax", "JAX"},          {"numpy", "NumPy"},
  };
  auto it = kNames.find(ToLower(id));
  return it == kNames.end() ? id : it->second;
}

// ---- template ---------------------------------------------------------------

PromptTemplate PromptTemplate::Default() {
  PromptTemplate t;
  t.task_section =
      "You are testing the {target_library} API `{api_name}`. Using the documentation and the "
      "usage example below, write a self-contained {target_library} program that calls "
      "`{api_name}` and prints its result, together with a {source_library} program that "
      "performs the same computation on the same inputs. Import everything you use.";
  t.emphasis_clauses = {
      "Choose inputs that contain NaNs and Infs.",
      "Exercise edge cases such as empty or zero-sized tensors, extreme magnitudes and "
      "unusual dtypes.",
      "Prefer argument values likely to trigger the API's error checking or to crash it.",
  };
  return t;
}

PromptTemplate PromptTemplate::Parse(std::string_view text) {
  PromptTemplate t;
  bool emphasis = false;
  std::vector<std::string> task;
  for (const std::string& line : SplitLines(text)) {
    if (Trim(line) == "[EMPHASIS]") {
      emphasis = true;
      continue;
    }
    if (emphasis) {
      if (!Trim(line).empty()) t.emphasis_clauses.emplace_back(Trim(line));
    } else {
      task.push_back(line);
    }
  }
  while (!task.empty() && Trim(task.back()).empty()) task.pop_back();
  t.task_section = Join(task, "\n");
  if (Trim(t.task_section).empty()) throw ConfigError("prompt template has no task text");
  return t;
}

PromptTemplate PromptTemplate::Load(const fs::path& path) { return Parse(ReadFile(path)); }

std::string PromptTemplate::RenderTask(const std::string& api_name,
                                       const std::string& source_library,
                                       const std::string& target_library,
                                       bool with_emphasis) const {
  std::string out = task_section;
  out = ReplaceAll(out, "{api_name}", api_name);
  out = ReplaceAll(out, "{source_library}", source_library);
  out = ReplaceAll(out, "{target_library}", target_library);
  if (with_emphasis) {
    for (const std::string& c : emphasis_clauses) out += "\n- " + c;
  }
  return out;
}

std::string Prompt::Render() const {
  std::string out = task_text + "\n";
  if (!doc_excerpt.empty()) out += "\n[API DOCUMENTATION]\n" + doc_excerpt + "\n";
  out += "\n[CODE EXAMPLE]\n";
  if (example.empty()) {
    out += "none available\n";
  } else {
    out += example;
    if (example.back() != '\n') out += '\n';
  }
  out += "\n[OUTPUT FORMAT]\n" + output_format + "\n";
  return out;
}

// ---- occurrences and decomposition ---------------------------------------------

namespace {

std::string TerminalOf(std::string_view api_name) {
  size_t dot = api_name.rfind('.');
  return std::string(dot == std::string_view::npos ? api_name : api_name.substr(dot + 1));
}

std::string RegexEscape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!IsIdentChar(c)) out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

int CountApiOccurrences(std::string_view example, std::string_view api_name) {
  std::string terminal = TerminalOf(api_name);
  if (terminal.empty()) return 0;
  try {
    py::Module m = py::Parse(example);
    return static_cast<int>(std::count_if(m.calls.begin(), m.calls.end(),
                                          [&](const py::CallSite& c) {
                                            return c.terminal == terminal;
                                          }));
  } catch (const py::SyntaxError&) {
    std::regex re("(^|[^A-Za-z0-9_])" + RegexEscape(terminal) + "\\s*\\(");
    std::string s(example);
    return static_cast<int>(
        std::distance(std::sregex_iterator(s.begin(), s.end(), re), std::sregex_iterator()));
  }
}

Decomposition DecomposeExample(std::string_view example, std::string_view api_name) {
  Decomposition whole;
  whole.snippets.emplace_back(example);
  std::string terminal = TerminalOf(api_name);
  py::Module m;
  try {
    m = py::Parse(example);
  } catch (const py::SyntaxError& e) {
    whole.undecomposed = true;
    whole.diagnostic = e.what();
    return whole;
  }
  std::vector<size_t> sites;
  for (size_t i = 0; i < m.calls.size(); ++i) {
    if (m.calls[i].terminal == terminal) sites.push_back(i);
  }
  if (sites.size() <= 1) return whole;

  std::set<size_t> site_stmts;
  for (size_t s : sites) {
    if (!site_stmts.insert(m.calls[s].stmt).second) {
      whole.undecomposed = true;
      whole.diagnostic = "several call sites share statement " + std::to_string(m.calls[s].stmt);
      return whole;
    }
  }

  Decomposition out;
  for (size_t s : sites) {
    size_t target = m.calls[s].stmt;
    std::vector<bool> keep(target + 1, false);
    keep[target] = true;
    std::set<std::string> needed = m.statements[target].loads;
    needed.insert(m.statements[target].modifies.begin(), m.statements[target].modifies.end());
    for (size_t j = target; j-- > 0;) {
      const py::Statement& st = m.statements[j];
      bool defines = std::any_of(needed.begin(), needed.end(), [&](const std::string& n) {
        return st.binds.count(n) || st.modifies.count(n);
      });
      if (!defines) continue;
      if (site_stmts.count(j)) {
        whole.undecomposed = true;
        whole.diagnostic = "call site in statement " + std::to_string(target) +
                           " depends on the call site in statement " + std::to_string(j);
        return whole;
      }
      keep[j] = true;
      for (const std::string& k : st.kills) needed.erase(k);
      needed.insert(st.loads.begin(), st.loads.end());
      needed.insert(st.modifies.begin(), st.modifies.end());
    }
    std::string snippet;
    for (size_t j = 0; j <= target; ++j) {
      if (keep[j]) snippet += m.StatementText(j) + "\n";
    }
    std::string diag;
    if (!py::Parses(snippet, &diag)) {
      whole.undecomposed = true;
      whole.diagnostic = "slice does not parse: " + diag;
      return whole;
    }
    out.snippets.push_back(std::move(snippet));
  }
  return out;
}

// ---- documentation trimming ------------------------------------------------------

namespace {

enum class DocPart { kSummary, kBody, kParams, kReturns, kExamples, kDroppable };

DocPart HeadingKind(std::string_view line, bool* is_heading) {
  std::string t = ToLower(Trim(line));
  *is_heading = false;
  if (StartsWith(t, ".. versionchanged") || StartsWith(t, ".. versionadded") ||
      StartsWith(t, ".. deprecated") || StartsWith(t, ".. note") || StartsWith(t, ".. seealso")) {
    *is_heading = true;
    return DocPart::kDroppable;
  }
  if (!t.empty() && t.back() == ':') t.pop_back();
  static const std::map<std::string, DocPart> kHeadings = {
      {"args", DocPart::kParams},          {"arguments", DocPart::kParams},
      {"parameters", DocPart::kParams},    {"params", DocPart::kParams},
      {"keyword args", DocPart::kParams},  {"keyword arguments", DocPart::kParams},
      {"returns", DocPart::kReturns},      {"return", DocPart::kReturns},
      {"yields", DocPart::kReturns},       {"return type", DocPart::kReturns},
      {"example", DocPart::kExamples},     {"examples", DocPart::kExamples},
      {"notes", DocPart::kDroppable},      {"note", DocPart::kDroppable},
      {"see also", DocPart::kDroppable},   {"changelog", DocPart::kDroppable},
      {"change log", DocPart::kDroppable}, {"version changed", DocPart::kDroppable},
      {"references", DocPart::kDroppable}, {"history", DocPart::kDroppable},
      {"raises", DocPart::kBody},          {"warning", DocPart::kBody},
  };
  auto it = kHeadings.find(t);
  if (it == kHeadings.end()) return DocPart::kBody;
  *is_heading = true;
  return it->second;
}

bool IsUnderline(std::string_view line) {
  std::string_view t = Trim(line);
  return t.size() >= 3 && t.find_first_not_of("-=~") == std::string_view::npos;
}

struct DocLine {
  std::string text;
  DocPart part;
  bool first_example = true;  // inside the first example of an Examples section
};

std::string Assemble(const std::vector<DocLine>& lines, const std::set<DocPart>& dropped,
                     bool first_example_only) {
  std::vector<std::string> kept;
  for (const DocLine& l : lines) {
    if (dropped.count(l.part)) continue;
    if (first_example_only && l.part == DocPart::kExamples && !l.first_example) continue;
    kept.push_back(l.text);
  }
  while (!kept.empty() && Trim(kept.back()).empty()) kept.pop_back();
  return Join(kept, "\n");
}

}  // namespace

std::string TrimDoc(std::string_view doc, size_t budget, const TokenEstimator& estimate) {
  if (estimate(doc) <= budget) return std::string(doc);

  std::vector<DocLine> lines;
  DocPart current = DocPart::kBody;
  bool seen_summary = false;
  bool example_content = false;  // saw content lines in the current Examples section
  bool example_closed = false;   // first example ended at a blank line
  std::vector<std::string> raw = SplitLines(doc);
  for (size_t i = 0; i < raw.size(); ++i) {
    const std::string& l = raw[i];
    if (!seen_summary) {
      if (Trim(l).empty()) continue;
      lines.push_back({l, DocPart::kSummary});
      seen_summary = true;
      continue;
    }
    bool heading = false;
    DocPart kind = HeadingKind(l, &heading);
    if (heading) {
      current = kind;
      example_content = false;
      example_closed = false;
      lines.push_back({l, current});
      if (i + 1 < raw.size() && IsUnderline(raw[i + 1])) lines.push_back({raw[++i], current});
      continue;
    }
    DocLine dl{l, current};
    if (current == DocPart::kExamples) {
      if (Trim(l).empty()) {
        if (example_content) example_closed = true;
      } else {
        example_content = true;
      }
      dl.first_example = !example_closed;
    }
    lines.push_back(dl);
  }

  std::set<DocPart> dropped;
  auto fits = [&](const std::string& s) { return estimate(s) <= budget; };
  const DocPart order[] = {DocPart::kDroppable, DocPart::kBody};
  for (DocPart p : order) {
    dropped.insert(p);
    std::string s = Assemble(lines, dropped, false);
    if (fits(s)) return s;
  }
  {
    std::string s = Assemble(lines, dropped, true);
    if (fits(s)) return s;
  }
  const DocPart rest[] = {DocPart::kExamples, DocPart::kReturns, DocPart::kParams};
  for (DocPart p : rest) {
    dropped.insert(p);
    std::string s = Assemble(lines, dropped, true);
    if (fits(s)) return s;
  }
  std::string summary = lines.empty() ? std::string() : lines.front().text;
  // Longest prefix of the summary within budget.
  size_t lo = 0;
  size_t hi = summary.size();
  while (lo < hi) {
    size_t mid = (lo + hi + 1) / 2;
    if (fits(summary.substr(0, mid))) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return summary.substr(0, lo);
}

// ---- prompt construction ---------------------------------------------------------

namespace {

std::string OutputFormat(const std::string& source, const std::string& target) {
  return "Reply with exactly two fenced code blocks. Open the first with ```source and put the " +
         source + " program in it. Open the second with ```target and put the " + target +
         " program in it.";
}

// Fits one prompt into the budget; false when even the minimal form is too long.
bool FitPrompt(Prompt& p, const catalog::ApiInfo& api, const PromptTemplate& tmpl,
               const std::string& source, const std::string& target,
               const BuildOptions& options) {
  for (bool emphasis : {true, false}) {
    p.task_text = tmpl.RenderTask(api.name, source, target, emphasis);
    p.doc_excerpt.clear();
    size_t base = options.estimate(p.Render());
    if (base > options.budget) continue;
    size_t doc_budget = options.budget - base;
    while (doc_budget > 0) {
      p.doc_excerpt = TrimDoc(api.doc, doc_budget, options.estimate);
      if (p.doc_excerpt.empty()) break;
      size_t total = options.estimate(p.Render());
      if (total <= options.budget) return true;
      size_t over = total - options.budget;
      doc_budget = doc_budget > over ? doc_budget - over : 0;
    }
    p.doc_excerpt.clear();
    return true;
  }
  return false;
}

}  // namespace

BuildResult BuildPrompts(const catalog::ApiInfo& api, const PromptTemplate& tmpl,
                         const BuildOptions& options) {
  BuildResult result;
  if (api.undocumented) {
    result.skipped.push_back(api.name + ": undocumented");
    return result;
  }
  std::string source = LibraryDisplayName(options.source_library);
  std::string target = LibraryDisplayName(api.target_library);

  struct Piece {
    std::string text;
    bool undecomposed;
  };
  std::vector<Piece> pieces;
  for (const std::string& ex : api.examples) {
    if (CountApiOccurrences(ex, api.name) >= 2) {
      Decomposition d = DecomposeExample(ex, api.name);
      for (std::string& s : d.snippets) pieces.push_back({std::move(s), d.undecomposed});
    } else {
      pieces.push_back({ex, false});
    }
  }
  if (pieces.empty()) pieces.push_back({"", false});

  int index = 0;
  for (Piece& piece : pieces) {
    Prompt p;
    p.api = api.name;
    p.library = api.target_library;
    p.example = std::move(piece.text);
    p.undecomposed = piece.undecomposed;
    p.output_format = OutputFormat(source, target);
    p.token_budget = options.budget;
    if (!FitPrompt(p, api, tmpl, source, target, options)) {
      result.skipped.push_back(api.name + ": example " + std::to_string(index) +
                               " exceeds the token budget");
      continue;
    }
    p.index_within_api = index++;
    result.prompts.push_back(std::move(p));
  }
  return result;
}

std::vector<fs::path> WritePrompts(const fs::path& root, const std::vector<Prompt>& prompts) {
  std::vector<fs::path> paths;
  for (const Prompt& p : prompts) {
    fs::path path = root / SanitizeName(p.library) / SanitizeName(p.api) /
                    (std::to_string(p.index_within_api) + ".txt");
    WriteFile(path, p.Render());
    paths.push_back(path);
  }
  return paths;
}

}  // namespace futur::prompt
