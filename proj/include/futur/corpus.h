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

// Historical bug corpus: issue ingestion (live tracker or offline dump),
// reproduction-snippet extraction, snippet preprocessing and on-disk storage.

#ifndef FUTUR_CORPUS_H_
#define FUTUR_CORPUS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "futur/util.h"

namespace futur::corpus {

struct IssueRecord {
  std::string source_library;  // "pytorch", "tensorflow", or any other name
  int64_t issue_id = 0;
  std::string title;
  std::string label;
  std::string body;
  std::string url;
};

struct SourceLibrarySpec {
  std::string name;                            // corpus directory name
  std::string repo;                            // "owner/name" on the tracker
  std::string api_base = "https://api.github.com";
  std::string token;                           // live mode only
  int per_page = 100;
  int max_retries = 3;
  int backoff_ms = 200;
};

enum class FetchMode { kLive, kOfflineDump };

struct FetchResult {
  std::vector<IssueRecord> issues;  // descending issue_id
  bool partial = false;             // transport retries exhausted mid-way
  std::string diagnostic;
};

// One page of issues; an empty page ends pagination. Throws TransportError
// for retryable failures.
class IssuePager {
 public:
  virtual ~IssuePager() = default;
  virtual std::vector<IssueRecord> Page(int page) = 0;
};

// Offline dump: one JSON object per line with fields
// {source, id, title, label, body (base64), url} and an optional `page`.
// Records without `page` all belong to page 1. Throws ParseError naming the
// offending line.
class DumpPager : public IssuePager {
 public:
  DumpPager(const fs::path& dump, std::string label, std::optional<std::string> since = {});
  std::vector<IssueRecord> Page(int page) override;

 private:
  std::map<int, std::vector<IssueRecord>> pages_;
};

// Tracker REST API (`GET /repos/<repo>/issues?labels=..&state=all&page=N`).
class LivePager : public IssuePager {
 public:
  LivePager(SourceLibrarySpec spec, std::string label, std::optional<std::string> since = {});
  std::vector<IssueRecord> Page(int page) override;

 private:
  SourceLibrarySpec spec_;
  std::string label_;
  std::optional<std::string> since_;
};

// Consumes every page, retrying transport failures with bounded backoff.
FetchResult FetchIssues(IssuePager& pager, const SourceLibrarySpec& spec);

FetchResult FetchIssues(const SourceLibrarySpec& source, const std::string& label, FetchMode mode,
                        const fs::path& dump = {}, std::optional<std::string> since = {});

// Serializes issues in the offline dump format.
std::string ToDumpLine(const IssueRecord& issue, int page = 0);

// ---- snippet extraction ---------------------------------------------------

struct ExtractOptions {
  std::vector<std::string> keywords = {"Standalone code to reproduce the issue", "Usage example",
                                       "Code example"};
  std::vector<std::string> host_language_tags = {"python", "py", "python3", "ipython"};
};

std::vector<std::string> ExtractSnippets(const IssueRecord& issue,
                                         const ExtractOptions& options = {});

// ---- preprocessing --------------------------------------------------------

// Library root identifier -> import statement.
using ImportTable = std::vector<std::pair<std::string, std::string>>;
ImportTable DefaultImportTable();

struct Preprocessed {
  bool ok = false;
  std::string text;
  std::vector<std::string> injected_imports;
  std::string diagnostic;  // set when !ok
};

Preprocessed PreprocessSnippet(std::string_view raw, const ImportTable& imports);

// ---- storage --------------------------------------------------------------

struct BugCode {
  std::string id;
  IssueRecord origin;
  std::string text;
  std::string label;
  std::vector<std::string> injected_imports;
  std::string storage_path;  // relative to the corpus root
};

struct IndexEntry {
  std::string id;
  std::string label;
  std::string path;
  std::string status;  // "stored"
};

// On-disk layout: <root>/<source>/<label>/<title>_<id>[_k].<ext> plus
// <root>/index.tsv. Single writer; Commit() replaces the index atomically.
class CorpusStore {
 public:
  explicit CorpusStore(fs::path root, std::string extension = "py");

  // Assigns code.id/storage_path and writes the snippet file.
  std::string Store(BugCode& code);
  void Reject(const IssueRecord& issue, size_t snippet_index, const std::string& diagnostic);
  void Commit();

  size_t stored() const { return index_.size(); }
  size_t rejected() const { return rejects_.size(); }
  const std::vector<IndexEntry>& index() const { return index_; }
  const fs::path& root() const { return root_; }

  static std::vector<IndexEntry> LoadIndex(const fs::path& root);

 private:
  fs::path root_;
  std::string ext_;
  std::vector<IndexEntry> index_;
  std::vector<std::string> rejects_;
  std::map<std::string, int> taken_;
};

struct MineOptions {
  SourceLibrarySpec source;
  std::string label;
  FetchMode mode = FetchMode::kOfflineDump;
  fs::path dump;
  std::optional<std::string> since;
  fs::path out;
  std::string extension = "py";
  ExtractOptions extract;
  ImportTable imports = DefaultImportTable();
};

struct MineReport {
  size_t issues = 0;
  size_t extracted = 0;
  size_t stored = 0;
  size_t rejected = 0;
  bool partial = false;
  std::vector<BugCode> codes;
};

// Mines into an existing store (several sources/labels share one corpus);
// the caller commits.
MineReport MineInto(CorpusStore& store, const MineOptions& options);

// Fresh store at options.out, committed on return.
MineReport Mine(const MineOptions& options);

}  // namespace futur::corpus

#endif  // FUTUR_CORPUS_H_
