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

#include "futur/catalog.h"

#include <algorithm>
#include <map>
#include <set>

namespace futur::catalog {

std::string ApiInfo::terminal() const {
  size_t dot = name.rfind('.');
  return dot == std::string::npos ? name : name.substr(dot + 1);
}

namespace {

enum class Section { kNone, kName, kDoc, kExample, kRefs };

bool SectionHeader(std::string_view line, Section* section, std::string_view* rest) {
  static const std::pair<std::string_view, Section> kHeaders[] = {
      {"NAME:", Section::kName},
      {"DOC:", Section::kDoc},
      {"EXAMPLE:", Section::kExample},
      {"REFS:", Section::kRefs},
  };
  for (const auto& [tag, s] : kHeaders) {
    if (StartsWith(line, tag)) {
      *section = s;
      *rest = Trim(line.substr(tag.size()));
      return true;
    }
  }
  return false;
}

// Drops leading and trailing blank lines, keeps everything else verbatim.
std::string TrimBlankEdges(const std::vector<std::string>& lines) {
  size_t b = 0;
  size_t e = lines.size();
  while (b < e && Trim(lines[b]).empty()) ++b;
  while (e > b && Trim(lines[e - 1]).empty()) --e;
  std::string out;
  for (size_t i = b; i < e; ++i) {
    out += lines[i];
    out += '\n';
  }
  return out;
}

}  // namespace

ApiInfo ParseApiRecord(std::string_view text, const std::string& library,
                       const std::string& origin) {
  ApiInfo api;
  api.target_library = library;
  api.record_path = origin;
  Section section = Section::kNone;
  std::vector<std::string> buf;
  auto flush = [&] {
    switch (section) {
      case Section::kDoc: {
        std::string d = TrimBlankEdges(buf);
        if (!d.empty()) d.pop_back();
        api.doc = d;
        break;
      }
      case Section::kExample:
        api.examples.push_back(TrimBlankEdges(buf));
        break;
      case Section::kRefs:
        for (const std::string& l : buf) {
          std::string_view r = Trim(l);
          if (!r.empty()) api.references.emplace_back(r);
        }
        break;
      case Section::kName:
        for (const std::string& l : buf) {
          if (!Trim(l).empty() && api.name.empty()) api.name = std::string(Trim(l));
        }
        break;
      case Section::kNone:
        for (const std::string& l : buf) {
          if (!Trim(l).empty()) {
            throw ParseError(origin + ": text before the first section: " + l);
          }
        }
        break;
    }
    buf.clear();
  };
  for (const std::string& line : SplitLines(text)) {
    Section next;
    std::string_view rest;
    if (SectionHeader(line, &next, &rest)) {
      flush();
      section = next;
      if (!rest.empty()) buf.emplace_back(rest);
      continue;
    }
    buf.push_back(line);
  }
  flush();
  if (api.name.empty()) throw ParseError(origin + ": record has no NAME");
  return api;
}

std::string FormatApiRecord(const ApiInfo& api) {
  std::string out = "NAME: " + api.name + "\nDOC:\n" + api.doc;
  if (!api.doc.empty()) out += "\n";
  for (const std::string& ex : api.examples) out += "EXAMPLE:\n" + ex;
  if (!api.references.empty()) {
    out += "REFS:\n";
    for (const std::string& r : api.references) out += r + "\n";
  }
  return out;
}

std::vector<ApiInfo> IngestApiDocs(const fs::path& bundle, const std::string& library) {
  if (!fs::is_directory(bundle)) throw IoError("doc bundle is not a directory: " + bundle.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(bundle)) {
    if (e.is_regular_file() && e.path().extension() == ".api") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ApiInfo> out;
  std::map<std::string, std::string> seen;
  for (const fs::path& f : files) {
    ApiInfo api = ParseApiRecord(ReadFile(f), library, f.string());
    auto [it, fresh] = seen.emplace(api.name, f.string());
    if (!fresh) {
      throw ParseError("duplicate API " + api.name + " in " + it->second + " and " + f.string());
    }
    out.push_back(std::move(api));
  }
  return out;
}

namespace {

// Depth-first search for the first documented API reachable from `start`.
// `hit_cycle` reports whether a reference led back into the current path.
const ApiInfo* FindDocumented(const std::map<std::string, const ApiInfo*>& by_name,
                              const ApiInfo& start, std::set<std::string>& path, bool* hit_cycle) {
  path.insert(start.name);
  for (const std::string& ref : start.references) {
    auto it = by_name.find(ref);
    if (it == by_name.end()) continue;
    const ApiInfo& next = *it->second;
    if (path.count(next.name)) {
      *hit_cycle = true;
      continue;
    }
    if (!next.doc.empty()) return &next;
    if (const ApiInfo* found = FindDocumented(by_name, next, path, hit_cycle)) return found;
  }
  return nullptr;
}

}  // namespace

std::vector<ApiInfo> ResolveReferences(const std::vector<ApiInfo>& catalog,
                                       ResolveReport* report) {
  std::map<std::string, const ApiInfo*> by_name;
  for (const ApiInfo& a : catalog) by_name.emplace(a.name, &a);
  std::vector<ApiInfo> out;
  out.reserve(catalog.size());
  for (const ApiInfo& a : catalog) {
    ApiInfo r = a;
    if (r.doc.empty()) {
      std::set<std::string> path;
      bool hit_cycle = false;
      const ApiInfo* src = FindDocumented(by_name, a, path, &hit_cycle);
      if (src) {
        r.doc = src->doc;
        if (r.examples.empty()) r.examples = src->examples;
        r.inherited_from = src->name;
        r.undocumented = false;
      } else {
        r.undocumented = true;
        if (hit_cycle && report) {
          report->warnings.push_back("reference cycle leaves " + a.name + " undocumented");
        }
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

void WriteCatalogIndex(const fs::path& path, const std::vector<ApiInfo>& catalog) {
  std::string out = "name\tdoc_length\texample_count\tflags\n";
  for (const ApiInfo& a : catalog) {
    std::vector<std::string> flags;
    if (a.undocumented) flags.push_back("undocumented");
    if (!a.inherited_from.empty()) flags.push_back("inherited:" + a.inherited_from);
    out += TsvEscape(a.name) + "\t" + std::to_string(a.doc.size()) + "\t" +
           std::to_string(a.examples.size()) + "\t" + Join(flags, ",") + "\n";
  }
  WriteFileAtomic(path, out);
}

std::vector<CatalogIndexRow> ReadCatalogIndex(const fs::path& path) {
  std::vector<CatalogIndexRow> rows;
  std::vector<std::string> lines = SplitLines(ReadFile(path));
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> c = Split(lines[i], '\t');
    if (c.size() != 4) throw ParseError(path.string() + ": bad row " + std::to_string(i + 1));
    rows.push_back({TsvUnescape(c[0]), std::stoul(c[1]), std::stoul(c[2]), c[3]});
  }
  return rows;
}

}  // namespace futur::catalog
