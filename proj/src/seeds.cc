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

#include "futur/seeds.h"

#include <algorithm>
#include <map>
#include <set>

#include "futur/pairs.h"
#include "futur/pysyntax.h"

namespace futur::seeds {

std::string KindName(Kind k) { return k == Kind::kPot ? "pot" : "gen"; }

Kind KindFromName(const std::string& name) {
  if (name == "pot") return Kind::kPot;
  if (name == "gen") return Kind::kGen;
  throw ParseError("unknown seed kind: " + name);
}

std::vector<std::string> DetectTargetApis(std::string_view text, const std::string& target_library,
                                          const std::vector<std::string>& known) {
  py::Module m;
  try {
    m = py::Parse(text);
  } catch (const py::SyntaxError&) {
    return {};
  }
  std::set<std::string> roots = pairs::LibraryRoots(target_library);
  std::set<std::string> known_set(known.begin(), known.end());
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const py::CallSite& c : m.calls) {
    if (c.callee.empty()) continue;
    std::string q = m.Qualify(c.callee);
    if (!roots.count(q.substr(0, q.find('.')))) continue;
    if (!known_set.empty() && !known_set.count(q)) continue;
    if (seen.insert(q).second) out.push_back(q);
  }
  return out;
}

std::vector<SeedCode> ConvertCorpus(const std::vector<corpus::BugCode>& corpus,
                                    backend::CodeModel& model, const ConvertOptions& options,
                                    ConvertReport* report) {
  ConvertReport local;
  ConvertReport& r = report ? *report : local;
  std::vector<SeedCode> out;
  for (const corpus::BugCode& bug : corpus) {
    ++r.attempted;
    std::string converted;
    try {
      converted = backend::ConvertCode(bug.text, options.target_library, model,
                                       options.temperature, options.max_new_tokens);
    } catch (const Error& e) {
      ++r.backend_failures;
      r.diagnostics.push_back(bug.id + ": " + e.what());
      continue;
    }
    corpus::Preprocessed p = corpus::PreprocessSnippet(converted, options.imports);
    if (!p.ok) {
      ++r.unparseable;
      r.diagnostics.push_back(bug.id + ": " + p.diagnostic);
      continue;
    }
    SeedCode s;
    s.id = "pot_" + bug.id;
    s.kind = Kind::kPot;
    s.origin = bug.id;
    s.target_library = options.target_library;
    s.text = std::move(p.text);
    s.target_apis = DetectTargetApis(s.text, options.target_library, options.known_apis);
    s.paired_source = bug.text;
    out.push_back(std::move(s));
    ++r.converted;
  }
  return out;
}

std::vector<SeedCode> GenerateRandom(const std::vector<catalog::ApiInfo>& apis,
                                     backend::CodeModel& model, const GenerateOptions& options,
                                     GenerateReport* report) {
  GenerateReport local;
  GenerateReport& r = report ? *report : local;
  std::vector<SeedCode> out;
  if (options.total == 0) return out;
  if (apis.empty()) throw ConfigError("seed generation needs at least one API");
  std::vector<std::string> known;
  for (const catalog::ApiInfo& a : apis) known.push_back(a.name);
  std::map<std::string, int> per_api;
  size_t budget = options.total * static_cast<size_t>(options.attempt_factor);
  while (out.size() < options.total && r.attempts < budget) {
    const catalog::ApiInfo& api = apis[out.size() % apis.size()];
    ++r.attempts;
    std::string code;
    try {
      code = backend::GenerateCode(api.name, options.target_library, model, options.temperature,
                                   options.max_new_tokens);
    } catch (const Error& e) {
      ++r.failures;
      r.diagnostics.push_back(api.name + ": " + e.what());
      continue;
    }
    corpus::Preprocessed p = corpus::PreprocessSnippet(code, options.imports);
    if (!p.ok) {
      ++r.failures;
      r.diagnostics.push_back(api.name + ": " + p.diagnostic);
      continue;
    }
    SeedCode s;
    s.id = "gen_" + SanitizeName(api.name) + "_" + std::to_string(per_api[api.name]++);
    s.kind = Kind::kGen;
    s.origin = api.name;
    s.target_library = options.target_library;
    s.text = std::move(p.text);
    s.target_apis = DetectTargetApis(s.text, options.target_library, known);
    if (options.paired_source) {
      try {
        std::string src = backend::ConvertToSource(s.text, options.source_library, model,
                                                   options.temperature);
        corpus::Preprocessed sp = corpus::PreprocessSnippet(src, options.imports);
        if (sp.ok) s.paired_source = std::move(sp.text);
      } catch (const Error& e) {
        r.diagnostics.push_back(s.id + ": no source counterpart: " + e.what());
      }
    }
    out.push_back(std::move(s));
  }
  r.partial = out.size() < options.total;
  return out;
}

std::vector<SeedCode> DedupeSeeds(const std::vector<SeedCode>& seeds,
                                  std::vector<DedupEntry>* ledger) {
  std::map<std::string, std::string> first;
  std::vector<SeedCode> out;
  for (const SeedCode& s : seeds) {
    auto [it, fresh] = first.emplace(py::NormalizedText(s.text), s.id);
    if (!fresh) {
      if (ledger) ledger->push_back({s.id, it->second});
      continue;
    }
    out.push_back(s);
  }
  return out;
}

fs::path SeedPath(const fs::path& root, const SeedCode& seed, const std::string& ext) {
  return root / SanitizeName(seed.target_library) / KindName(seed.kind) /
         (SanitizeName(seed.id) + "." + ext);
}

fs::path PairedSourcePath(const fs::path& root, const SeedCode& seed, const std::string& ext) {
  return root / SanitizeName(seed.target_library) / KindName(seed.kind) /
         (SanitizeName(seed.id) + ".source." + ext);
}

void WriteSeedStore(const fs::path& root, const std::vector<SeedCode>& seeds,
                    const std::string& ext) {
  std::string index = "id\tkind\torigin\tapis\tpaired_source\tpath\tlibrary\n";
  for (const SeedCode& s : seeds) {
    fs::path path = SeedPath(root, s, ext);
    WriteFile(path, s.text);
    std::string paired;
    if (!s.paired_source.empty()) {
      fs::path pp = PairedSourcePath(root, s, ext);
      WriteFile(pp, s.paired_source);
      paired = fs::relative(pp, root).string();
    }
    index += TsvEscape(s.id) + "\t" + KindName(s.kind) + "\t" + TsvEscape(s.origin) + "\t" +
             TsvEscape(Join(s.target_apis, ",")) + "\t" + TsvEscape(paired) + "\t" +
             TsvEscape(fs::relative(path, root).string()) + "\t" + TsvEscape(s.target_library) +
             "\n";
  }
  WriteFileAtomic(root / "index.tsv", index);
}

std::vector<SeedCode> LoadSeedStore(const fs::path& root) {
  std::vector<SeedCode> out;
  std::vector<std::string> lines = SplitLines(ReadFile(root / "index.tsv"));
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> c = Split(lines[i], '\t');
    if (c.size() != 7) throw ParseError("seed index row " + std::to_string(i + 1) + " malformed");
    SeedCode s;
    s.id = TsvUnescape(c[0]);
    s.kind = KindFromName(c[1]);
    s.origin = TsvUnescape(c[2]);
    for (const std::string& a : Split(TsvUnescape(c[3]), ',')) {
      if (!a.empty()) s.target_apis.push_back(a);
    }
    std::string paired = TsvUnescape(c[4]);
    s.target_library = TsvUnescape(c[6]);
    s.text = ReadFile(root / TsvUnescape(c[5]));
    if (!paired.empty()) s.paired_source = ReadFile(root / paired);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace futur::seeds
