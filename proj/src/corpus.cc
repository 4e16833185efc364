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

#include "futur/corpus.h"

#include <algorithm>
#include <chrono>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "futur/pysyntax.h"
#include "httplib.h"
#include "json.hpp"

namespace futur::corpus {

using nlohmann::json;

// ---- ingestion ------------------------------------------------------------

namespace {

IssueRecord IssueFromDump(const json& j, size_t line_no) {
  IssueRecord r;
  try {
    r.source_library = j.at("source").get<std::string>();
    r.issue_id = j.at("id").get<int64_t>();
    r.title = j.at("title").get<std::string>();
    r.label = j.at("label").get<std::string>();
    r.body = Base64Decode(j.at("body").get<std::string>());
    r.url = j.value("url", "");
  } catch (const std::exception& e) {
    throw ParseError("malformed dump record at line " + std::to_string(line_no) + ": " + e.what());
  }
  if (r.issue_id <= 0) {
    throw ParseError("malformed dump record at line " + std::to_string(line_no) +
                     ": id must be positive");
  }
  if (r.label.empty()) {
    throw ParseError("malformed dump record at line " + std::to_string(line_no) +
                     ": empty label");
  }
  return r;
}

}  // namespace

DumpPager::DumpPager(const fs::path& dump, std::string label, std::optional<std::string> since) {
  if (!fs::exists(dump)) throw IoError("dump file not found: " + dump.string());
  std::string content = ReadFile(dump);
  size_t line_no = 0;
  for (const std::string& line : SplitLines(content)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("malformed dump record at line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    IssueRecord r = IssueFromDump(j, line_no);
    if (r.label != label) continue;
    if (since && j.contains("created_at") && j["created_at"].get<std::string>() < *since) continue;
    int page = j.value("page", 1);
    pages_[page].push_back(std::move(r));
  }
}

std::vector<IssueRecord> DumpPager::Page(int page) {
  auto it = pages_.find(page);
  if (it == pages_.end()) return {};
  return it->second;
}

LivePager::LivePager(SourceLibrarySpec spec, std::string label, std::optional<std::string> since)
    : spec_(std::move(spec)), label_(std::move(label)), since_(std::move(since)) {
  if (spec_.repo.empty()) throw ConfigError("live mode needs a tracker repository");
}

std::vector<IssueRecord> LivePager::Page(int page) {
  httplib::Client client(spec_.api_base);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);
  httplib::Headers headers = {{"Accept", "application/vnd.github+json"},
                              {"User-Agent", "futur-corpus-miner"}};
  if (!spec_.token.empty()) headers.emplace("Authorization", "Bearer " + spec_.token);
  httplib::Params params = {{"labels", label_},
                            {"state", "all"},
                            {"per_page", std::to_string(spec_.per_page)},
                            {"page", std::to_string(page)}};
  if (since_) params.emplace("since", *since_);
  std::string path = "/repos/" + spec_.repo + "/issues";
  auto res = client.Get(path, params, headers);
  if (!res) {
    throw TransportError("GET " + path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status >= 500 || res->status == 429) {
    throw TransportError("GET " + path + " returned " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error("GET " + path + " returned " + std::to_string(res->status));
  }
  json arr;
  try {
    arr = json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw TransportError("unparseable tracker response: " + std::string(e.what()));
  }
  std::vector<IssueRecord> out;
  for (const json& j : arr) {
    if (j.contains("pull_request")) continue;
    IssueRecord r;
    r.source_library = spec_.name;
    r.issue_id = j.at("number").get<int64_t>();
    r.title = j.value("title", "");
    r.label = label_;
    if (j.contains("body") && j["body"].is_string()) r.body = j["body"].get<std::string>();
    r.url = j.value("html_url", "");
    out.push_back(std::move(r));
  }
  return out;
}

FetchResult FetchIssues(IssuePager& pager, const SourceLibrarySpec& spec) {
  FetchResult result;
  std::set<int64_t> seen;
  for (int page = 1;; ++page) {
    std::vector<IssueRecord> batch;
    bool fetched = false;
    for (int attempt = 0; attempt <= spec.max_retries; ++attempt) {
      try {
        batch = pager.Page(page);
        fetched = true;
        break;
      } catch (const TransportError& e) {
        result.diagnostic = e.what();
        if (attempt < spec.max_retries) {
          std::this_thread::sleep_for(std::chrono::milliseconds(spec.backoff_ms << attempt));
        }
      }
    }
    if (!fetched) {
      result.partial = true;
      break;
    }
    if (batch.empty()) break;
    for (IssueRecord& r : batch) {
      if (seen.insert(r.issue_id).second) result.issues.push_back(std::move(r));
    }
  }
  std::sort(result.issues.begin(), result.issues.end(),
            [](const IssueRecord& a, const IssueRecord& b) { return a.issue_id > b.issue_id; });
  return result;
}

FetchResult FetchIssues(const SourceLibrarySpec& source, const std::string& label, FetchMode mode,
                        const fs::path& dump, std::optional<std::string> since) {
  if (mode == FetchMode::kOfflineDump) {
    DumpPager pager(dump, label, since);
    return FetchIssues(pager, source);
  }
  LivePager pager(source, label, since);
  return FetchIssues(pager, source);
}

std::string ToDumpLine(const IssueRecord& issue, int page) {
  json j = {{"source", issue.source_library}, {"id", issue.issue_id},
            {"title", issue.title},           {"label", issue.label},
            {"body", Base64Encode(issue.body)}, {"url", issue.url}};
  if (page > 0) j["page"] = page;
  return j.dump();
}

// ---- extraction -----------------------------------------------------------

namespace {

bool IsFence(std::string_view line, std::string* info) {
  std::string_view t = Trim(line);
  if (StartsWith(t, "```") || StartsWith(t, "~~~")) {
    if (info) *info = ToLower(Trim(t.substr(3)));
    return true;
  }
  return false;
}

bool IsHeadingLike(std::string_view line) {
  std::string_view t = Trim(line);
  if (t.empty()) return false;
  if (t[0] == '#') return true;
  if (StartsWith(t, "**") && EndsWith(t, "**") && t.size() > 4) return true;
  return t.back() == ':';
}

}  // namespace

std::vector<std::string> ExtractSnippets(const IssueRecord& issue, const ExtractOptions& options) {
  struct Block {
    std::string label;
    std::string info;
    std::string text;
  };
  std::vector<Block> blocks;
  std::string heading;
  std::string last_line;
  std::vector<std::string> lines = SplitLines(issue.body);
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string info;
    if (IsFence(lines[i], &info)) {
      Block b;
      b.label = heading.empty() ? last_line : heading;
      b.info = info;
      std::string fence = std::string(Trim(lines[i]).substr(0, 3));
      size_t j = i + 1;
      for (; j < lines.size(); ++j) {
        if (StartsWith(Trim(lines[j]), fence)) break;
        b.text += lines[j];
        b.text += '\n';
      }
      blocks.push_back(std::move(b));
      i = j;
      continue;
    }
    if (Trim(lines[i]).empty()) continue;
    if (IsHeadingLike(lines[i])) heading = lines[i];
    last_line = lines[i];
  }

  std::vector<std::string> tagged;
  for (const Block& b : blocks) {
    for (const std::string& kw : options.keywords) {
      if (IContains(b.label, kw)) {
        tagged.push_back(b.text);
        break;
      }
    }
  }
  if (!tagged.empty()) return tagged;
  std::vector<std::string> fallback;
  for (const Block& b : blocks) {
    std::string lang = b.info.substr(0, b.info.find_first_of(" \t{"));
    if (std::find(options.host_language_tags.begin(), options.host_language_tags.end(), lang) !=
        options.host_language_tags.end()) {
      fallback.push_back(b.text);
    }
  }
  return fallback;
}

// ---- preprocessing --------------------------------------------------------

ImportTable DefaultImportTable() {
  return {
      {"torch", "import torch"},
      {"tf", "import tensorflow as tf"},
      {"tensorflow", "import tensorflow"},
      {"np", "import numpy as np"},
      {"numpy", "import numpy"},
      {"mx", "import mlx.core as mx"},
      {"mlx", "import mlx.core"},
      {"ms", "import mindspore as ms"},
      {"mindspore", "import mindspore"},
      {"flow", "import oneflow as flow"},
      {"oneflow", "import oneflow"},
      {"math", "import math"},
  };
}

namespace {

bool IsShellLine(std::string_view line) {
  static const std::regex shell(
      R"(^\s*(\$ |!pip |pip3? (install|uninstall|list|show)\b|conda (install|create|activate)\b|python3? (-[cm] |\S+\.py\b)))");
  return std::regex_search(line.begin(), line.end(), shell);
}

bool IsExceptionLine(std::string_view line) {
  static const std::regex exc(R"(^[A-Za-z_][\w.]*(Error|Exception|Warning|Interrupt|Exit)\b)");
  return std::regex_search(line.begin(), line.end(), exc);
}

std::string Dedent(const std::vector<std::string>& lines) {
  size_t common = std::string::npos;
  for (const std::string& l : lines) {
    if (Trim(l).empty()) continue;
    size_t lead = l.find_first_not_of(" \t");
    common = std::min(common, lead);
  }
  if (common == std::string::npos) common = 0;
  std::string out;
  for (const std::string& l : lines) {
    out += Trim(l).empty() ? std::string() : l.substr(common);
    out += '\n';
  }
  return out;
}

}  // namespace

Preprocessed PreprocessSnippet(std::string_view raw, const ImportTable& imports) {
  Preprocessed result;
  std::vector<std::string> lines = SplitLines(raw);

  // Markdown residue.
  std::erase_if(lines, [](const std::string& l) { return IsFence(l, nullptr); });

  // Interactive sessions: keep prompt lines, drop everything they printed.
  bool interactive = std::any_of(lines.begin(), lines.end(), [](const std::string& l) {
    return StartsWith(Trim(l), ">>>");
  });
  if (interactive) {
    std::vector<std::string> kept;
    for (const std::string& l : lines) {
      std::string_view t = l;
      size_t lead = t.find_first_not_of(" \t");
      if (lead == std::string_view::npos) continue;
      t.remove_prefix(lead);
      if (StartsWith(t, ">>> ") || StartsWith(t, "... ")) {
        kept.emplace_back(t.substr(4));
      } else if (t == ">>>" || t == "...") {
        kept.emplace_back();
      }
    }
    lines = std::move(kept);
  }

  // Shell commands and pasted tracebacks.
  std::vector<std::string> code;
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string_view t = Trim(lines[i]);
    if (StartsWith(t, "Traceback (most recent call last)")) {
      while (i + 1 < lines.size() && !IsExceptionLine(Trim(lines[i + 1]))) ++i;
      ++i;
      continue;
    }
    if (IsShellLine(lines[i])) continue;
    std::string l = lines[i];
    while (!l.empty() && (l.back() == ' ' || l.back() == '\t' || l.back() == '\r')) l.pop_back();
    code.push_back(std::move(l));
  }
  while (!code.empty() && code.front().empty()) code.erase(code.begin());
  while (!code.empty() && code.back().empty()) code.pop_back();
  if (code.empty()) {
    result.diagnostic = "empty after preprocessing";
    return result;
  }
  std::string text = Dedent(code);

  py::Module module;
  try {
    module = py::Parse(text);
  } catch (const py::SyntaxError& e) {
    result.diagnostic = e.what();
    return result;
  }
  std::set<std::string> bound;
  std::set<std::string> loaded;
  for (const py::Statement& st : module.statements) {
    bound.insert(st.binds.begin(), st.binds.end());
    loaded.insert(st.loads.begin(), st.loads.end());
  }
  std::string header;
  for (const auto& [root, stmt] : imports) {
    if (loaded.count(root) && !bound.count(root)) {
      header += stmt + "\n";
      result.injected_imports.push_back(stmt);
      bound.insert(root);
    }
  }
  text = header + text;
  std::string diag;
  if (!py::Parses(text, &diag)) {
    result.diagnostic = diag;
    return result;
  }
  result.ok = true;
  result.text = std::move(text);
  return result;
}

// ---- storage --------------------------------------------------------------

CorpusStore::CorpusStore(fs::path root, std::string extension)
    : root_(std::move(root)), ext_(std::move(extension)) {}

std::string CorpusStore::Store(BugCode& code) {
  std::string title = SanitizeName(code.origin.title);
  if (title.size() > 80) title.resize(80);
  std::string base = title + "_" + std::to_string(code.origin.issue_id);
  std::string dir = SanitizeName(code.origin.source_library) + "/" + SanitizeName(code.label);
  std::string key = dir + "/" + base;
  int& count = taken_[key];
  std::string name = count == 0 ? base : base + "_" + std::to_string(count);
  ++count;
  code.id = name;
  code.storage_path = dir + "/" + name + "." + ext_;
  WriteFile(root_ / code.storage_path, code.text);
  index_.push_back(IndexEntry{code.id, code.label, code.storage_path, "stored"});
  return code.storage_path;
}

void CorpusStore::Reject(const IssueRecord& issue, size_t snippet_index,
                         const std::string& diagnostic) {
  rejects_.push_back(issue.source_library + "\t" + std::to_string(issue.issue_id) + "\t" +
                     TsvEscape(issue.label) + "\t" + std::to_string(snippet_index) + "\t" +
                     TsvEscape(diagnostic));
}

void CorpusStore::Commit() {
  std::string idx = "id\tlabel\tpath\tstatus\n";
  for (const IndexEntry& e : index_) {
    idx += TsvEscape(e.id) + "\t" + TsvEscape(e.label) + "\t" + TsvEscape(e.path) + "\t" +
           e.status + "\n";
  }
  fs::create_directories(root_);
  WriteFileAtomic(root_ / "index.tsv", idx);
  std::string rej = "source\tissue_id\tlabel\tsnippet\tdiagnostic\n";
  for (const std::string& r : rejects_) rej += r + "\n";
  WriteFileAtomic(root_ / "rejects.tsv", rej);
}

std::vector<IndexEntry> CorpusStore::LoadIndex(const fs::path& root) {
  std::vector<IndexEntry> out;
  std::vector<std::string> lines = SplitLines(ReadFile(root / "index.tsv"));
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> cells = Split(lines[i], '\t');
    if (cells.size() != 4) throw ParseError("bad corpus index row " + std::to_string(i + 1));
    out.push_back(IndexEntry{TsvUnescape(cells[0]), TsvUnescape(cells[1]), TsvUnescape(cells[2]),
                             cells[3]});
  }
  return out;
}

MineReport MineInto(CorpusStore& store, const MineOptions& options) {
  MineReport report;
  FetchResult fetched =
      FetchIssues(options.source, options.label, options.mode, options.dump, options.since);
  report.issues = fetched.issues.size();
  report.partial = fetched.partial;
  for (const IssueRecord& issue : fetched.issues) {
    if (issue.body.empty()) continue;
    std::vector<std::string> snippets = ExtractSnippets(issue, options.extract);
    report.extracted += snippets.size();
    for (size_t k = 0; k < snippets.size(); ++k) {
      Preprocessed p = PreprocessSnippet(snippets[k], options.imports);
      if (!p.ok) {
        store.Reject(issue, k, p.diagnostic);
        ++report.rejected;
        continue;
      }
      BugCode code;
      code.origin = issue;
      code.label = issue.label;
      code.text = std::move(p.text);
      code.injected_imports = std::move(p.injected_imports);
      store.Store(code);
      ++report.stored;
      report.codes.push_back(std::move(code));
    }
  }
  return report;
}

MineReport Mine(const MineOptions& options) {
  CorpusStore store(options.out, options.extension);
  MineReport report = MineInto(store, options);
  store.Commit();
  return report;
}

}  // namespace futur::corpus
