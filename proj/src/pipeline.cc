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

#include "futur/pipeline.h"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>
#include <sstream>

#include <unistd.h>

#include "futur/backend.h"
#include "futur/catalog.h"
#include "futur/corpus.h"
#include "futur/dataset.h"
#include "futur/harness.h"
#include "futur/metrics.h"
#include "futur/oracle.h"
#include "futur/pairs.h"
#include "futur/prompt.h"
#include "futur/seeds.h"
#include "json.hpp"

namespace futur::pipeline {

using json = nlohmann::json;

// ---- config -----------------------------------------------------------------

namespace {

const std::vector<std::pair<std::string, std::string>>& DefaultEntries() {
  static const std::vector<std::pair<std::string, std::string>> kDefaults = {
      {"campaign.target_library", "mlx"},
      {"campaign.source_library", "pytorch"},
      {"campaign.output_root", "futur-out"},
      {"campaign.seed", "0"},
      {"corpus.source", "pytorch"},
      {"corpus.label", "Nans and Infs"},
      {"corpus.dump", ""},
      {"corpus.live", "false"},
      {"corpus.repo", ""},
      {"corpus.since", ""},
      {"corpus.token_env", "GITHUB_TOKEN"},
      {"corpus.import_table", ""},
      {"corpus.out", ""},
      {"catalog.docs", ""},
      {"prompts.template", ""},
      {"prompts.budget", "2048"},
      {"pairs.per_api_limit", "5"},
      {"pairs.retry_factor", "3"},
      {"pairs.mutations", "100"},
      {"backend.kind", "mock"},
      {"backend.rulebook", ""},
      {"backend.endpoint", ""},
      {"backend.model_id", ""},
      {"backend.auth_env", ""},
      {"backend.requests_per_minute", "0"},
      {"backend.max_retries", "3"},
      {"backend.timeout_s", "120"},
      {"backend.temperature", "0.4"},
      {"generate.total", "3000"},
      {"generate.attempt_factor", "5"},
      {"runner.target", ""},
      {"runner.source", ""},
      {"runner.target_args", ""},
      {"runner.source_args", ""},
      {"runner.timeout_ms", "30000"},
      {"runner.parallelism", "4"},
      {"oracle.threshold", "0.01"},
      {"oracle.strict_exception_types", "false"},
      {"finetune.base_model", "codellama/CodeLlama-7b-Instruct-hf"},
      {"finetune.quantization_bits", "4"},
      {"finetune.lora_rank", "8"},
      {"finetune.learning_rate", "3e-4"},
      {"finetune.max_steps", "400"},
      {"finetune.validation_fraction", "0.1"},
      {"finetune.validation_interval_steps", "20"},
      {"finetune.combination", "both"},
      {"backtest.api_map", ""},
      {"backtest.array_constructor", ""},
      {"backtest.import_line", ""},
      {"backtest.max_probes", "64"},
  };
  return kDefaults;
}

std::set<std::string> KnownSections() {
  std::set<std::string> out;
  for (const auto& [k, v] : DefaultEntries()) out.insert(k.substr(0, k.find('.')));
  return out;
}

}  // namespace

Config Config::Defaults() {
  Config c;
  for (const auto& [k, v] : DefaultEntries()) c.values_[k] = v;
  c.base_dir_ = fs::current_path();
  return c;
}

Config Config::Parse(std::string_view text, const fs::path& base_dir) {
  Config c = Defaults();
  c.base_dir_ = base_dir;
  std::string section;
  size_t line_no = 0;
  for (const std::string& raw : SplitLines(text)) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      }
      section = std::string(Trim(line.substr(1, line.size() - 2)));
      if (!KnownSections().count(section)) {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": key outside a section");
    }
    std::string key = section + "." + std::string(Trim(line.substr(0, eq)));
    if (!c.values_.count(key)) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key " + key);
    }
    c.values_[key] = std::string(Trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::Load(const fs::path& path, bool with_environment) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  Config c = Parse(ReadFile(path), fs::absolute(path).parent_path());
  if (with_environment) c.ApplyEnvironment(environ);
  return c;
}

void Config::ApplyEnvironment(char** envp) {
  if (!envp) return;
  static const std::set<std::string> sections = KnownSections();
  for (char** e = envp; *e; ++e) {
    std::string_view entry(*e);
    if (!StartsWith(entry, "FUTUR_")) continue;
    size_t eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    std::string name = ToLower(entry.substr(6, eq - 6));
    size_t us = name.find('_');
    if (us == std::string::npos) continue;
    std::string section = name.substr(0, us);
    if (!sections.count(section)) continue;
    std::string key = section + "." + name.substr(us + 1);
    if (!values_.count(key)) throw ConfigError("unknown key " + key + " in " + std::string(entry.substr(0, eq)));
    values_[key] = std::string(Trim(entry.substr(eq + 1)));
  }
}

void Config::ApplyOverride(std::string_view assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override must look like section.key=value: " + std::string(assignment));
  }
  Set(std::string(Trim(assignment.substr(0, eq))), std::string(Trim(assignment.substr(eq + 1))));
}

void Config::Set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) throw ConfigError("unknown key " + key);
  values_[key] = value;
}

const std::string& Config::Get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key " + key);
  return it->second;
}

int64_t Config::GetInt(const std::string& key) const {
  const std::string& v = Get(key);
  try {
    size_t used = 0;
    int64_t out = std::stoll(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + " must be an integer, got '" + v + "'");
}

double Config::GetDouble(const std::string& key) const {
  const std::string& v = Get(key);
  try {
    size_t used = 0;
    double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + " must be a number, got '" + v + "'");
}

bool Config::GetBool(const std::string& key) const {
  std::string v = ToLower(Get(key));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no" || v.empty()) return false;
  throw ConfigError(key + " must be true or false, got '" + v + "'");
}

fs::path Config::GetPath(const std::string& key) const {
  const std::string& v = Get(key);
  if (v.empty()) return {};
  fs::path p(v);
  return p.is_absolute() ? p : (base_dir_ / p).lexically_normal();
}

std::vector<std::string> Config::GetList(const std::string& key) const {
  std::vector<std::string> out;
  for (const std::string& item : Split(Get(key), ',')) {
    std::string_view t = Trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string Config::DumpSection(const std::string& section) const {
  std::string out = "[" + section + "]\n";
  for (const auto& [k, v] : values_) {
    if (StartsWith(k, section + ".")) out += k.substr(section.size() + 1) + " = " + v + "\n";
  }
  return out;
}

std::string Config::Dump() const {
  std::string out;
  for (const std::string& s : KnownSections()) out += DumpSection(s) + "\n";
  return out;
}

// ---- stage graph ------------------------------------------------------------

const std::vector<StageSpec>& Stages() {
  static const std::vector<StageSpec> kStages = {
      {"mine", {}, {"campaign", "corpus"}},
      {"catalog", {}, {"campaign", "catalog"}},
      {"prompts", {"catalog"}, {"campaign", "prompts"}},
      {"pairs", {"prompts"}, {"campaign", "pairs", "backend"}},
      {"mutate", {"pairs"}, {"campaign", "pairs"}},
      {"dataset", {"mutate"}, {"campaign"}},
      {"finetune-config", {"dataset"}, {"campaign", "finetune"}},
      {"convert", {"mine"}, {"campaign", "backend", "corpus"}},
      {"generate", {"catalog"}, {"campaign", "backend", "generate", "corpus"}},
      {"run", {"convert", "generate"}, {"campaign", "runner"}},
      {"oracle", {"run"}, {"campaign", "oracle"}},
      {"backtest", {"oracle"}, {"campaign", "backtest", "runner"}},
      {"report", {"oracle"}, {"campaign", "oracle"}},
  };
  return kStages;
}

const StageSpec* FindStage(const std::string& name) {
  for (const StageSpec& s : Stages()) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<std::string> TopologicalOrder(const std::vector<StageSpec>& stages) {
  std::map<std::string, size_t> indegree;
  for (const StageSpec& s : stages) indegree[s.name] = s.deps.size();
  std::vector<std::string> order;
  std::set<std::string> done;
  while (order.size() < stages.size()) {
    bool progressed = false;
    for (const StageSpec& s : stages) {
      if (done.count(s.name) || indegree[s.name] != 0) continue;
      order.push_back(s.name);
      done.insert(s.name);
      for (const StageSpec& t : stages) {
        for (const std::string& d : t.deps) {
          if (d == s.name) --indegree[t.name];
        }
      }
      progressed = true;
      break;
    }
    if (!progressed) throw Error("stage graph has a cycle");
  }
  return order;
}

// ---- stamps -----------------------------------------------------------------

namespace {

fs::path OutputRoot(const Config& c) {
  fs::path p = c.GetPath("campaign.output_root");
  if (p.empty()) throw ConfigError("campaign.output_root is empty");
  return p;
}

void HashInput(const fs::path& p, std::string* acc) {
  if (p.empty()) return;
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(p)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      *acc += "file " + fs::relative(f, p).string() + " " + Sha256Hex(ReadFile(f)) + "\n";
    }
  } else if (fs::exists(p)) {
    *acc += "file " + p.filename().string() + " " + Sha256Hex(ReadFile(p)) + "\n";
  } else {
    *acc += "missing " + p.string() + "\n";
  }
}

std::vector<fs::path> ExternalInputs(const std::string& stage, const Config& c) {
  if (stage == "mine") {
    std::vector<fs::path> out{c.GetPath("corpus.import_table")};
    if (!c.GetBool("corpus.live")) out.push_back(c.GetPath("corpus.dump"));
    return out;
  }
  if (stage == "catalog") return {c.GetPath("catalog.docs")};
  if (stage == "prompts") return {c.GetPath("prompts.template")};
  if (stage == "pairs" || stage == "convert" || stage == "generate") {
    return {c.GetPath("backend.rulebook"), c.GetPath("corpus.import_table")};
  }
  if (stage == "run") return {c.GetPath("runner.target"), c.GetPath("runner.source")};
  if (stage == "backtest") return {c.GetPath("runner.source")};
  return {};
}

}  // namespace

fs::path StampPath(const Config& config, const std::string& stage) {
  return OutputRoot(config) / ".stamps" / stage;
}

std::string StageFingerprint(const StageSpec& stage, const Config& config) {
  std::string acc = "stage " + stage.name + "\n";
  for (const std::string& s : stage.sections) acc += config.DumpSection(s);
  for (const std::string& d : stage.deps) {
    fs::path stamp = StampPath(config, d);
    acc += "dep " + d + " " + (fs::exists(stamp) ? std::string(Trim(ReadFile(stamp))) : "-") + "\n";
  }
  for (const fs::path& p : ExternalInputs(stage.name, config)) HashInput(p, &acc);
  return Sha256Hex(acc);
}

// ---- stages -----------------------------------------------------------------

namespace {

struct Context {
  const Config& cfg;
  std::ostream& out;
  fs::path root;
  std::string target;
  std::string source;

  fs::path CorpusDir() const {
    fs::path p = cfg.GetPath("corpus.out");
    return p.empty() ? root / "corpus" : p;
  }
  fs::path CatalogDir() const { return root / "catalog" / SanitizeName(target); }
  fs::path PromptsDir() const { return root / "prompts"; }
  fs::path PairsDir() const { return root / "pairs"; }
  fs::path DatasetDir() const { return root / "datasets" / SanitizeName(target); }
  fs::path SeedsDir() const { return root / "seeds"; }
  fs::path OutcomesDir() const { return root / "outcomes"; }
  fs::path BugsDir() const { return root / "bugs"; }
};

corpus::ImportTable Imports(const Context& ctx) {
  corpus::ImportTable table;
  fs::path file = ctx.cfg.GetPath("corpus.import_table");
  if (!file.empty()) {
    for (const std::string& line : SplitLines(ReadFile(file))) {
      std::string_view t = Trim(line);
      if (t.empty() || t[0] == '#') continue;
      size_t tab = t.find('\t');
      if (tab == std::string_view::npos) {
        throw ConfigError("import table line needs alias<TAB>import statement: " + std::string(t));
      }
      table.emplace_back(std::string(Trim(t.substr(0, tab))), std::string(Trim(t.substr(tab + 1))));
    }
  }
  for (const auto& entry : corpus::DefaultImportTable()) table.push_back(entry);
  for (const std::string& lib : {ctx.target, ctx.source, ctx.cfg.Get("corpus.source")}) {
    for (const std::string& r : pairs::LibraryRoots(lib)) {
      bool known = std::any_of(table.begin(), table.end(), [&](const auto& e) { return e.first == r; });
      if (!known) table.emplace_back(r, "import " + r);
    }
  }
  return table;
}

std::unique_ptr<backend::CodeModel> Backend(const Context& ctx) {
  backend::BackendDescriptor d;
  std::string kind = ctx.cfg.Get("backend.kind");
  if (kind == "mock") {
    d.kind = backend::BackendDescriptor::Kind::kMockRulebook;
  } else if (kind == "http") {
    d.kind = backend::BackendDescriptor::Kind::kHttpEndpoint;
  } else {
    throw ConfigError("backend.kind must be mock or http, got '" + kind + "'");
  }
  d.rulebook_path = ctx.cfg.GetPath("backend.rulebook");
  d.endpoint_url = ctx.cfg.Get("backend.endpoint");
  d.model_id = ctx.cfg.Get("backend.model_id");
  d.auth_env = ctx.cfg.Get("backend.auth_env");
  d.requests_per_minute = ctx.cfg.GetDouble("backend.requests_per_minute");
  d.max_retries = static_cast<int>(ctx.cfg.GetInt("backend.max_retries"));
  d.timeout_s = static_cast<int>(ctx.cfg.GetInt("backend.timeout_s"));
  return backend::MakeBackend(d);
}

std::vector<catalog::ApiInfo> LoadCatalog(const Context& ctx) {
  return catalog::IngestApiDocs(ctx.CatalogDir(), ctx.target);
}

json PromptToJson(const prompt::Prompt& p) {
  return json{{"api", p.api},
              {"library", p.library},
              {"task_text", p.task_text},
              {"doc_excerpt", p.doc_excerpt},
              {"example", p.example},
              {"output_format", p.output_format},
              {"token_budget", p.token_budget},
              {"index_within_api", p.index_within_api},
              {"undecomposed", p.undecomposed}};
}

prompt::Prompt PromptFromJson(const json& j) {
  prompt::Prompt p;
  p.api = j.at("api").get<std::string>();
  p.library = j.at("library").get<std::string>();
  p.task_text = j.at("task_text").get<std::string>();
  p.doc_excerpt = j.at("doc_excerpt").get<std::string>();
  p.example = j.at("example").get<std::string>();
  p.output_format = j.at("output_format").get<std::string>();
  p.token_budget = j.at("token_budget").get<size_t>();
  p.index_within_api = j.at("index_within_api").get<int>();
  p.undecomposed = j.at("undecomposed").get<bool>();
  return p;
}

std::vector<prompt::Prompt> LoadPrompts(const Context& ctx) {
  std::vector<prompt::Prompt> out;
  for (const std::string& line : SplitLines(ReadFile(ctx.PromptsDir() / "prompts.ndrec"))) {
    if (Trim(line).empty()) continue;
    try {
      out.push_back(PromptFromJson(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError("bad prompt record: " + std::string(e.what()));
    }
  }
  return out;
}

uint64_t DerivedSeed(uint64_t base, const std::string& tag) {
  return base ^ std::stoull(Sha256Hex(tag).substr(0, 16), nullptr, 16);
}

void WriteCounts(const fs::path& path, const std::vector<std::pair<std::string, size_t>>& counts) {
  std::string out;
  for (const auto& [k, v] : counts) out += k + "\t" + std::to_string(v) + "\n";
  WriteFileAtomic(path, out);
}

std::map<std::string, std::string> ReadCounts(const fs::path& path) {
  std::map<std::string, std::string> out;
  if (!fs::exists(path)) return out;
  for (const std::string& line : SplitLines(ReadFile(path))) {
    size_t tab = line.find('\t');
    if (tab != std::string::npos) out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

// Replaces the seeds of one kind in the store, keeping the other kind.
void ReplaceSeeds(const Context& ctx, seeds::Kind kind, const std::vector<seeds::SeedCode>& fresh) {
  std::vector<seeds::SeedCode> all;
  if (fs::exists(ctx.SeedsDir() / "index.tsv")) {
    for (seeds::SeedCode& s : seeds::LoadSeedStore(ctx.SeedsDir())) {
      if (s.kind != kind) all.push_back(std::move(s));
    }
  }
  fs::remove_all(ctx.SeedsDir() / SanitizeName(ctx.target) / seeds::KindName(kind));
  all.insert(all.end(), fresh.begin(), fresh.end());
  seeds::WriteSeedStore(ctx.SeedsDir(), all);
}

harness::RunnerHandle Runner(const Context& ctx, const std::string& which) {
  harness::RunnerHandle h;
  h.executable = ctx.cfg.GetPath("runner." + which);
  if (h.executable.empty()) throw ConfigError("runner." + which + " is not set");
  std::istringstream args(ctx.cfg.Get("runner." + which + "_args"));
  for (std::string a; args >> a;) h.extra_args.push_back(a);
  return h;
}

// ---- individual stages ----

void StageMine(Context& ctx) {
  corpus::MineOptions o;
  o.source.name = ctx.cfg.Get("corpus.source");
  o.source.repo = ctx.cfg.Get("corpus.repo");
  std::string token_env = ctx.cfg.Get("corpus.token_env");
  if (const char* tok = token_env.empty() ? nullptr : std::getenv(token_env.c_str())) {
    o.source.token = tok;
  }
  o.label = ctx.cfg.Get("corpus.label");
  o.mode = ctx.cfg.GetBool("corpus.live") ? corpus::FetchMode::kLive : corpus::FetchMode::kOfflineDump;
  o.dump = ctx.cfg.GetPath("corpus.dump");
  if (o.mode == corpus::FetchMode::kOfflineDump && o.dump.empty()) {
    throw ConfigError("corpus.dump is required unless corpus.live = true");
  }
  if (!ctx.cfg.Get("corpus.since").empty()) o.since = ctx.cfg.Get("corpus.since");
  o.out = ctx.CorpusDir();
  o.imports = Imports(ctx);
  corpus::MineReport r = corpus::Mine(o);
  ctx.out << "mine: " << r.issues << " issues, " << r.extracted << " snippets, " << r.stored
          << " stored, " << r.rejected << " rejected" << (r.partial ? " (partial fetch)" : "")
          << "\n";
}

void StageCatalog(Context& ctx) {
  fs::path docs = ctx.cfg.GetPath("catalog.docs");
  if (docs.empty()) throw ConfigError("catalog.docs is not set");
  catalog::ResolveReport report;
  std::vector<catalog::ApiInfo> apis =
      catalog::ResolveReferences(catalog::IngestApiDocs(docs, ctx.target), &report);
  fs::remove_all(ctx.CatalogDir());
  for (const catalog::ApiInfo& a : apis) {
    WriteFile(ctx.CatalogDir() / (SanitizeName(a.name) + ".api"), catalog::FormatApiRecord(a));
  }
  catalog::WriteCatalogIndex(ctx.root / "catalog" / "index.tsv", apis);
  for (const std::string& w : report.warnings) ctx.out << "catalog: warning: " << w << "\n";
  size_t undocumented = std::count_if(apis.begin(), apis.end(), [](const auto& a) { return a.undocumented; });
  ctx.out << "catalog: " << apis.size() << " APIs, " << undocumented << " undocumented\n";
}

void StagePrompts(Context& ctx) {
  fs::path tpath = ctx.cfg.GetPath("prompts.template");
  prompt::PromptTemplate tmpl = tpath.empty() ? prompt::PromptTemplate::Default()
                                              : prompt::PromptTemplate::Load(tpath);
  prompt::BuildOptions o;
  o.budget = static_cast<size_t>(ctx.cfg.GetInt("prompts.budget"));
  o.source_library = ctx.source;
  std::vector<prompt::Prompt> all;
  std::vector<std::string> skipped;
  for (const catalog::ApiInfo& api : LoadCatalog(ctx)) {
    prompt::BuildResult r = prompt::BuildPrompts(api, tmpl, o);
    all.insert(all.end(), r.prompts.begin(), r.prompts.end());
    skipped.insert(skipped.end(), r.skipped.begin(), r.skipped.end());
  }
  fs::remove_all(ctx.PromptsDir());
  prompt::WritePrompts(ctx.PromptsDir(), all);
  std::string nd;
  for (const prompt::Prompt& p : all) nd += PromptToJson(p).dump() + "\n";
  WriteFileAtomic(ctx.PromptsDir() / "prompts.ndrec", nd);
  for (const std::string& s : skipped) ctx.out << "prompts: skipped " << s << "\n";
  ctx.out << "prompts: " << all.size() << " prompts\n";
}

void StagePairs(Context& ctx) {
  std::unique_ptr<backend::CodeModel> model = Backend(ctx);
  std::map<std::string, std::vector<prompt::Prompt>> by_api;
  std::vector<std::string> order;
  for (prompt::Prompt& p : LoadPrompts(ctx)) {
    if (!by_api.count(p.api)) order.push_back(p.api);
    by_api[p.api].push_back(std::move(p));
  }
  pairs::GenerateOptions o;
  o.per_api_limit = static_cast<int>(ctx.cfg.GetInt("pairs.per_api_limit"));
  o.retry_factor = static_cast<int>(ctx.cfg.GetInt("pairs.retry_factor"));
  o.source_library = ctx.source;
  o.temperature = ctx.cfg.GetDouble("backend.temperature");
  fs::remove_all(ctx.PairsDir() / SanitizeName(ctx.target));
  size_t total = 0, failures = 0;
  for (const std::string& api : order) {
    pairs::GenerateResult r = pairs::GeneratePairs(by_api[api], *model, o);
    for (const pairs::CodePair& p : r.pairs) WriteFile(pairs::PairPath(ctx.PairsDir(), p), pairs::FormatPair(p));
    total += r.pairs.size();
    failures += r.failures;
    for (const std::string& d : r.diagnostics) ctx.out << "pairs: " << d << "\n";
  }
  ctx.out << "pairs: " << total << " pairs for " << order.size() << " APIs, " << failures
          << " rejected completions\n";
}

void StageMutate(Context& ctx) {
  int m = static_cast<int>(ctx.cfg.GetInt("pairs.mutations"));
  uint64_t base = static_cast<uint64_t>(ctx.cfg.GetInt("campaign.seed"));
  std::vector<pairs::CodePair> originals = pairs::LoadPairs(ctx.PairsDir(), ctx.target);
  std::string ledger = "parent\tindex\tseed\tedits\n";
  std::string nd;
  size_t count = 0, unmutated = 0;
  for (const pairs::CodePair& p : originals) {
    uint64_t seed = DerivedSeed(base, p.library + "/" + p.Id());
    for (const pairs::MutatedPair& mp : pairs::MutatePair(p, m, seed)) {
      ledger += TsvEscape(mp.parent) + "\t" + std::to_string(mp.mutation_index) + "\t" +
                std::to_string(mp.rng_seed) + "\t" + TsvEscape(pairs::EditSummary(mp.edits)) + "\n";
      nd += pairs::MutatedToLine(mp) + "\n";
      ++count;
      unmutated += mp.unmutated;
    }
  }
  fs::path dir = ctx.PairsDir() / SanitizeName(ctx.target);
  WriteFileAtomic(dir / "mutations.tsv", ledger);
  WriteFileAtomic(dir / "mutated.ndrec", nd);
  ctx.out << "mutate: " << count << " mutated pairs from " << originals.size() << " pairs ("
          << unmutated << " without a mutable literal)\n";
}

void StageDataset(Context& ctx) {
  dataset::DatasetInput in;
  in.originals = pairs::LoadPairs(ctx.PairsDir(), ctx.target);
  fs::path mutated = ctx.PairsDir() / SanitizeName(ctx.target) / "mutated.ndrec";
  for (const std::string& line : SplitLines(ReadFile(mutated))) {
    if (!Trim(line).empty()) in.mutated.push_back(pairs::MutatedFromLine(line));
  }
  dataset::PromptIndex index;
  for (const prompt::Prompt& p : LoadPrompts(ctx)) index[p.Id()] = p.Render();
  dataset::BuildOptions o;
  o.shuffle_seed = static_cast<uint64_t>(ctx.cfg.GetInt("campaign.seed"));
  std::vector<std::string> warnings;
  auto gen = dataset::BuildGenerationDataset(in, index, o, &warnings);
  auto conv = dataset::BuildConversionDataset(in, ctx.target, o);
  dataset::WriteGeneration(ctx.DatasetDir() / "generation.ndrec", gen);
  dataset::WriteConversion(ctx.DatasetDir() / "conversion.ndrec", conv);
  for (const std::string& w : warnings) ctx.out << "dataset: warning: " << w << "\n";
  ctx.out << "dataset: " << gen.size() << " generation and " << conv.size()
          << " conversion records\n";
}

void StageFinetune(Context& ctx) {
  dataset::FineTuneConfig c;
  c.base_model_id = ctx.cfg.Get("finetune.base_model");
  c.quantization_bits = static_cast<int>(ctx.cfg.GetInt("finetune.quantization_bits"));
  c.lora_rank = static_cast<int>(ctx.cfg.GetInt("finetune.lora_rank"));
  c.learning_rate = ctx.cfg.GetDouble("finetune.learning_rate");
  c.max_steps = static_cast<int>(ctx.cfg.GetInt("finetune.max_steps"));
  c.validation_fraction = ctx.cfg.GetDouble("finetune.validation_fraction");
  c.validation_interval_steps = static_cast<int>(ctx.cfg.GetInt("finetune.validation_interval_steps"));
  c.combination = ctx.cfg.Get("finetune.combination");
  c.shuffle_seed = static_cast<uint64_t>(ctx.cfg.GetInt("campaign.seed"));
  if (c.combination == "generation" || c.combination == "both") {
    c.dataset_paths.push_back(ctx.DatasetDir() / "generation.ndrec");
  }
  if (c.combination == "conversion" || c.combination == "both") {
    c.dataset_paths.push_back(ctx.DatasetDir() / "conversion.ndrec");
  }
  dataset::EmitFinetuneConfig(ctx.DatasetDir() / "finetune.cfg", c);
  ctx.out << "finetune-config: wrote " << (ctx.DatasetDir() / "finetune.cfg").string() << "\n";
}

void StageConvert(Context& ctx) {
  std::unique_ptr<backend::CodeModel> model = Backend(ctx);
  std::vector<corpus::BugCode> his;
  for (const corpus::IndexEntry& e : corpus::CorpusStore::LoadIndex(ctx.CorpusDir())) {
    corpus::BugCode b;
    b.id = e.id;
    b.label = e.label;
    b.storage_path = e.path;
    b.text = ReadFile(ctx.CorpusDir() / e.path);
    b.origin.source_library = Split(e.path, '/').front();
    b.origin.label = e.label;
    his.push_back(std::move(b));
  }
  seeds::ConvertOptions o;
  o.target_library = ctx.target;
  o.temperature = ctx.cfg.GetDouble("backend.temperature");
  o.imports = Imports(ctx);
  seeds::ConvertReport r;
  std::vector<seeds::SeedCode> pot = seeds::DedupeSeeds(seeds::ConvertCorpus(his, *model, o, &r));
  ReplaceSeeds(ctx, seeds::Kind::kPot, pot);
  WriteCounts(ctx.SeedsDir() / "convert.tsv", {{"attempted", r.attempted},
                                               {"converted", r.converted},
                                               {"backend_failures", r.backend_failures},
                                               {"unparseable", r.unparseable},
                                               {"stored", pot.size()}});
  for (const std::string& d : r.diagnostics) ctx.out << "convert: " << d << "\n";
  ctx.out << "convert: " << r.converted << " of " << r.attempted << " historical bug codes converted\n";
}

void StageGenerate(Context& ctx) {
  std::unique_ptr<backend::CodeModel> model = Backend(ctx);
  seeds::GenerateOptions o;
  o.target_library = ctx.target;
  o.source_library = ctx.source;
  o.total = static_cast<size_t>(ctx.cfg.GetInt("generate.total"));
  o.attempt_factor = static_cast<int>(ctx.cfg.GetInt("generate.attempt_factor"));
  o.temperature = ctx.cfg.GetDouble("backend.temperature");
  o.imports = Imports(ctx);
  seeds::GenerateReport r;
  std::vector<seeds::SeedCode> produced = seeds::GenerateRandom(LoadCatalog(ctx), *model, o, &r);
  std::vector<seeds::DedupEntry> dropped;
  std::vector<seeds::SeedCode> gen = seeds::DedupeSeeds(produced, &dropped);
  ReplaceSeeds(ctx, seeds::Kind::kGen, gen);
  std::string dedup = "removed\tkept\n";
  for (const seeds::DedupEntry& d : dropped) dedup += d.removed + "\t" + d.kept + "\n";
  WriteFileAtomic(ctx.SeedsDir() / "dedup.tsv", dedup);
  WriteCounts(ctx.SeedsDir() / "generate.tsv", {{"attempts", r.attempts},
                                                {"failures", r.failures},
                                                {"generated", produced.size()},
                                                {"unique", gen.size()}});
  for (const std::string& d : r.diagnostics) ctx.out << "generate: " << d << "\n";
  ctx.out << "generate: " << produced.size() << " generated, " << gen.size() << " unique"
          << (r.partial ? " (attempt budget exhausted)" : "") << "\n";
}

int StageRun(Context& ctx, const std::string& fingerprint) {
  std::vector<seeds::SeedCode> all = seeds::LoadSeedStore(ctx.SeedsDir());
  harness::RunnerHandle target = Runner(ctx, "target");
  std::optional<harness::RunnerHandle> source;
  if (!ctx.cfg.Get("runner.source").empty()) source = Runner(ctx, "source");
  std::vector<harness::RunRequest> requests;
  size_t without_source = 0;
  for (const seeds::SeedCode& s : all) {
    for (harness::Device d : {harness::Device::kCpu, harness::Device::kGpu}) {
      requests.push_back({s.id, seeds::SeedPath(ctx.SeedsDir(), s), d, "target", target});
    }
    if (!s.paired_source.empty() && source) {
      requests.push_back({s.id, seeds::PairedSourcePath(ctx.SeedsDir(), s), harness::Device::kCpu,
                          "source", *source});
    } else {
      ++without_source;
    }
  }
  // A ledger written for other inputs is discarded; one written for these
  // inputs is resumed.
  fs::path marker = ctx.OutcomesDir() / "inputs.sha256";
  if (!fs::exists(marker) || Trim(ReadFile(marker)) != fingerprint) {
    fs::remove_all(ctx.OutcomesDir());
    WriteFile(marker, fingerprint + "\n");
  }
  harness::OutcomeLedger ledger(ctx.OutcomesDir() / "outcomes.ndrec");
  harness::CampaignOptions o;
  o.parallelism = static_cast<int>(ctx.cfg.GetInt("runner.parallelism"));
  o.timeout_ms = ctx.cfg.GetInt("runner.timeout_ms");
  o.work_dir = ctx.OutcomesDir() / "work";
  harness::CampaignStats st = harness::RunCampaign(requests, ledger, o);
  std::map<std::string, size_t> labels;
  for (const harness::ExecutionOutcome& e : ledger.Outcomes()) ++labels[e.StatusLabel()];
  ctx.out << "run: " << st.executed << " executed, " << st.skipped << " already recorded, "
          << without_source << " seeds without a source counterpart\n";
  for (const auto& [l, n] : labels) ctx.out << "run:   " << l << " " << n << "\n";
  for (const std::string& f : st.failures) ctx.out << "run: harness failure: " << f << "\n";
  return st.failures.empty() ? kExitOk : kExitStageFailure;
}

std::vector<harness::ExecutionOutcome> LoadOutcomes(const Context& ctx) {
  harness::OutcomeLedger ledger(ctx.OutcomesDir() / "outcomes.ndrec");
  return ledger.Outcomes();
}

std::vector<oracle::BugRecord> LoadBugs(const Context& ctx) {
  std::vector<oracle::BugRecord> out;
  if (!fs::exists(ctx.BugsDir())) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(ctx.BugsDir())) {
    if (e.path().extension() == ".tsv" && e.path().filename() != "verdicts.tsv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    for (oracle::BugRecord& b : oracle::ReadBugLedger(f)) out.push_back(std::move(b));
  }
  return out;
}

void StageOracle(Context& ctx) {
  oracle::CompareOptions o;
  o.threshold = ctx.cfg.GetDouble("oracle.threshold");
  o.strict_exception_types = ctx.cfg.GetBool("oracle.strict_exception_types");
  oracle::AnalysisResult r =
      oracle::AnalyzeCampaign(seeds::LoadSeedStore(ctx.SeedsDir()), LoadOutcomes(ctx), o);

  // Triage progress recorded by hand in an earlier ledger carries over.
  fs::path ledger = ctx.BugsDir() / (SanitizeName(ctx.target) + ".tsv");
  if (fs::exists(ledger)) {
    std::map<std::string, oracle::BugStatus> known;
    for (const oracle::BugRecord& b : oracle::ReadBugLedger(ledger)) known[b.DedupKey()] = b.status;
    for (oracle::BugRecord& b : r.bugs) {
      auto it = known.find(b.DedupKey());
      if (it != known.end()) b.status = it->second;
    }
  }
  oracle::WriteBugLedger(ledger, r.bugs);
  std::string nd;
  for (const oracle::InputPattern& p : r.patterns) nd += oracle::PatternToLine(p) + "\n";
  WriteFileAtomic(ctx.BugsDir() / "patterns.ndrec", nd);
  std::string verdicts = "seed\tbackends\tlibraries\tnote\n";
  size_t flagged = 0;
  for (const auto& [seed, sv] : r.verdicts) {
    verdicts += TsvEscape(seed) + "\t" + (sv.backends ? sv.backends->Label() : "-") + "\t" +
                (sv.libraries ? sv.libraries->Label() : "-") + "\t" + TsvEscape(sv.note) + "\n";
    flagged += (sv.backends && sv.backends->potential_bug()) ||
               (sv.libraries && sv.libraries->potential_bug());
  }
  WriteFileAtomic(ctx.BugsDir() / "verdicts.tsv", verdicts);
  WriteFileAtomic(ctx.BugsDir() / "oracle.log", Join(r.log, "\n") + (r.log.empty() ? "" : "\n"));
  ctx.out << "oracle: " << r.verdicts.size() << " seeds, " << flagged << " flagged, "
          << r.bugs.size() << " unique bugs, " << r.patterns.size() << " input patterns\n";
  for (const oracle::BugRecord& b : r.bugs) {
    ctx.out << "oracle:   " << b.id << " " << b.seed_id << " " << b.api << " "
            << oracle::SymptomName(b.symptom) << " " << oracle::CauseName(b.cause) << " "
            << b.signature << "\n";
  }
}

std::map<std::string, std::string> DefaultApiMap(const Context& ctx) {
  std::map<std::string, std::string> out;
  std::set<std::string> troots = pairs::LibraryRoots(ctx.target);
  std::set<std::string> sroots = pairs::LibraryRoots(ctx.source);
  if (troots.empty() || sroots.empty()) return out;
  const std::string& sroot = *sroots.begin();
  for (const catalog::ApiInfo& a : LoadCatalog(ctx)) {
    for (const std::string& t : troots) {
      if (StartsWith(a.name, t + ".")) out[a.name] = sroot + a.name.substr(t.size());
    }
  }
  return out;
}

void StageBacktest(Context& ctx) {
  oracle::BacktestOptions o;
  std::vector<std::string> map_items = ctx.cfg.GetList("backtest.api_map");
  if (map_items.empty()) {
    o.api_map = DefaultApiMap(ctx);
  } else {
    for (const std::string& item : map_items) {
      size_t eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("backtest.api_map entries look like target=source");
      o.api_map[std::string(Trim(item.substr(0, eq)))] = std::string(Trim(item.substr(eq + 1)));
    }
  }
  std::set<std::string> troots = pairs::LibraryRoots(ctx.target);
  std::set<std::string> sroots = pairs::LibraryRoots(ctx.source);
  o.target_root = troots.empty() ? ctx.target : *troots.begin();
  o.source_root = sroots.empty() ? ctx.source : *sroots.begin();
  o.array_constructor = ctx.cfg.Get("backtest.array_constructor");
  if (o.array_constructor.empty()) o.array_constructor = o.source_root + ".array";
  o.import_line = ctx.cfg.Get("backtest.import_line");
  if (o.import_line.empty()) o.import_line = "import " + o.source_root;
  o.max_probes_per_pattern = static_cast<size_t>(ctx.cfg.GetInt("backtest.max_probes"));

  fs::path dir = ctx.root / "backtest";
  fs::remove_all(dir);
  std::vector<std::string> notes;
  std::vector<oracle::ProbeSeed> probes;
  std::set<std::string> seen;
  fs::path patterns = ctx.BugsDir() / "patterns.ndrec";
  for (const std::string& line : SplitLines(ReadFile(patterns))) {
    if (Trim(line).empty()) continue;
    for (oracle::ProbeSeed& p : oracle::RenderProbeSeeds(oracle::PatternFromLine(line), o, &notes)) {
      if (seen.insert(p.id).second) probes.push_back(std::move(p));
    }
  }
  std::vector<harness::RunRequest> requests;
  harness::RunnerHandle source = Runner(ctx, "source");
  for (const oracle::ProbeSeed& p : probes) {
    fs::path path = dir / "probes" / (p.id + ".py");
    WriteFile(path, p.text);
    requests.push_back({p.id, path, harness::Device::kCpu, "source", source});
  }
  harness::OutcomeLedger ledger(dir / "outcomes.ndrec");
  harness::CampaignOptions co;
  co.parallelism = static_cast<int>(ctx.cfg.GetInt("runner.parallelism"));
  co.timeout_ms = ctx.cfg.GetInt("runner.timeout_ms");
  co.work_dir = dir / "work";
  harness::CampaignStats st;
  if (!requests.empty()) st = harness::RunCampaign(requests, ledger, co);
  std::map<std::string, const harness::ExecutionOutcome*> by_id;
  std::vector<harness::ExecutionOutcome> outcomes = ledger.Outcomes();
  for (const harness::ExecutionOutcome& e : outcomes) by_id[e.seed_id] = &e;
  std::string findings = "probe\ttarget_api\tsource_api\toutcome\tfinding\n";
  size_t crashes = 0;
  for (const oracle::ProbeSeed& p : probes) {
    auto it = by_id.find(p.id);
    std::string label = it == by_id.end() ? "missing" : it->second->StatusLabel();
    bool crash = it != by_id.end() && it->second->status == harness::Status::kCrash;
    crashes += crash;
    findings += p.id + "\t" + p.target_api + "\t" + p.source_api + "\t" + label + "\t" +
                (crash ? "potential_bug(crash)" : "-") + "\n";
  }
  WriteFileAtomic(dir / "findings.tsv", findings);
  for (const std::string& n : notes) ctx.out << "backtest: " << n << "\n";
  for (const std::string& f : st.failures) ctx.out << "backtest: harness failure: " << f << "\n";
  ctx.out << "backtest: " << probes.size() << " probes, " << crashes
          << " crashed the source library\n";
}

void StageReport(Context& ctx) {
  metrics::MetricsInput in;
  in.seeds = seeds::LoadSeedStore(ctx.SeedsDir());
  in.outcomes = LoadOutcomes(ctx);
  for (const corpus::IndexEntry& e : corpus::CorpusStore::LoadIndex(ctx.CorpusDir())) {
    in.his_labels[e.id] = e.label;
  }
  in.his_total = in.his_labels.size();
  std::map<std::string, std::string> gen = ReadCounts(ctx.SeedsDir() / "generate.tsv");
  if (gen.count("generated")) in.generated_total = std::stoull(gen["generated"]);
  for (const catalog::CatalogIndexRow& row : catalog::ReadCatalogIndex(ctx.root / "catalog" / "index.tsv")) {
    in.target_apis.push_back(row.name);
  }
  in.threshold = ctx.cfg.GetDouble("oracle.threshold");
  metrics::CampaignMetrics m = metrics::ComputeMetrics(in);
  metrics::TallyBugs(LoadBugs(ctx), &m);
  metrics::EmitReport(ctx.root / "report", m);
  metrics::Table t = metrics::MetricTable(m);
  for (size_t i = 0; i < t.rows.size(); ++i) ctx.out << "report: " << t.rows[i][0] << " " << t.rows[i][1] << "\n";
  ctx.out << "report: wrote " << (ctx.root / "report").string() << "\n";
}

int Dispatch(const std::string& stage, Context& ctx, const std::string& fingerprint) {
  if (stage == "mine") StageMine(ctx);
  else if (stage == "catalog") StageCatalog(ctx);
  else if (stage == "prompts") StagePrompts(ctx);
  else if (stage == "pairs") StagePairs(ctx);
  else if (stage == "mutate") StageMutate(ctx);
  else if (stage == "dataset") StageDataset(ctx);
  else if (stage == "finetune-config") StageFinetune(ctx);
  else if (stage == "convert") StageConvert(ctx);
  else if (stage == "generate") StageGenerate(ctx);
  else if (stage == "run") return StageRun(ctx, fingerprint);
  else if (stage == "oracle") StageOracle(ctx);
  else if (stage == "backtest") StageBacktest(ctx);
  else if (stage == "report") StageReport(ctx);
  else throw Error("no implementation for stage " + stage);
  return kExitOk;
}

int RunOne(const StageSpec& spec, const Config& config, std::ostream& out, std::ostream& err,
           const RunOptions& options) {
  for (const std::string& d : spec.deps) {
    if (!fs::exists(StampPath(config, d))) {
      err << "futur " << spec.name << ": missing prerequisite: run `futur " << d
          << "` first\n";
      return kExitMissingPrerequisite;
    }
  }
  std::string fingerprint = StageFingerprint(spec, config);
  fs::path stamp = StampPath(config, spec.name);
  if (!options.force && fs::exists(stamp) && Trim(ReadFile(stamp)) == fingerprint) {
    out << spec.name << ": up to date\n";
    return kExitOk;
  }
  Context ctx{config, out, OutputRoot(config), config.Get("campaign.target_library"),
              config.Get("campaign.source_library")};
  fs::remove(stamp);
  int rc = Dispatch(spec.name, ctx, fingerprint);
  if (rc == kExitOk) WriteFileAtomic(stamp, fingerprint + "\n");
  return rc;
}

}  // namespace

int RunStage(const std::string& stage, const Config& config, std::ostream& out, std::ostream& err,
             const RunOptions& options) {
  std::vector<std::string> names;
  if (stage == "all") {
    names = TopologicalOrder(Stages());
  } else if (FindStage(stage)) {
    names = {stage};
  } else {
    err << "futur: unknown stage '" << stage << "'\n";
    return kExitUsage;
  }
  for (const std::string& name : names) {
    int rc;
    try {
      rc = RunOne(*FindStage(name), config, out, err, options);
    } catch (const std::exception& e) {
      err << "futur " << name << ": error: " << e.what() << "\n";
      rc = kExitStageFailure;
    }
    if (rc != kExitOk) return rc;
  }
  return kExitOk;
}

}  // namespace futur::pipeline
