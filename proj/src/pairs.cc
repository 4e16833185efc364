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

#include "futur/pairs.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "futur/pysyntax.h"
#include "json.hpp"

namespace futur::pairs {

using nlohmann::json;

std::set<std::string> LibraryRoots(const std::string& library) {
  static const std::map<std::string, std::set<std::string>> kRoots = {
      {"pytorch", {"torch"}},       {"torch", {"torch"}},
      {"tensorflow", {"tensorflow", "keras"}},
      {"mlx", {"mlx"}},             {"mindspore", {"mindspore"}},
      {"oneflow", {"oneflow"}},     {"jax", {"jax", "jaxlib"}},
      {"numpy", {"numpy"}},
  };
  auto it = kRoots.find(ToLower(library));
  if (it != kRoots.end()) return it->second;
  return {library};
}

namespace {

std::string RootOf(std::string_view dotted) {
  return std::string(dotted.substr(0, dotted.find('.')));
}

std::set<std::string> ImportedRoots(const py::Module& m) {
  std::set<std::string> out;
  for (const py::ImportBinding& b : m.imports) out.insert(RootOf(b.module));
  return out;
}

std::set<std::string> ReferencedRoots(const py::Module& m) {
  std::set<std::string> out = ImportedRoots(m);
  std::set<std::string> bound;
  for (const py::Statement& st : m.statements) bound.insert(st.binds.begin(), st.binds.end());
  for (const py::Statement& st : m.statements) {
    for (const std::string& n : st.loads) {
      if (!bound.count(n)) out.insert(n);
    }
  }
  return out;
}

bool Intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
  return std::any_of(a.begin(), a.end(), [&](const std::string& x) { return b.count(x) > 0; });
}

}  // namespace

std::set<std::string> ReferencedRoots(std::string_view code) {
  return ReferencedRoots(py::Parse(code));
}

std::string VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kAccept: return "accept";
    case Verdict::kParseFailS: return "parse_fail_S";
    case Verdict::kParseFailT: return "parse_fail_T";
    case Verdict::kWrongLibrary: return "wrong_library";
    case Verdict::kCrossContamination: return "cross_contamination";
  }
  return "unknown";
}

Verdict ValidatePair(const CodePair& pair, const std::string& source_library,
                     const std::string& target_library) {
  py::Module s;
  py::Module t;
  try {
    s = py::Parse(pair.source_code);
  } catch (const py::SyntaxError&) {
    return Verdict::kParseFailS;
  }
  try {
    t = py::Parse(pair.target_code);
  } catch (const py::SyntaxError&) {
    return Verdict::kParseFailT;
  }
  std::set<std::string> src_roots = LibraryRoots(source_library);
  std::set<std::string> tar_roots = LibraryRoots(target_library);
  if (Intersects(ImportedRoots(t), src_roots) || Intersects(ImportedRoots(s), tar_roots)) {
    return Verdict::kCrossContamination;
  }
  if (!Intersects(ReferencedRoots(s), src_roots) || !Intersects(ReferencedRoots(t), tar_roots)) {
    return Verdict::kWrongLibrary;
  }
  return Verdict::kAccept;
}

std::optional<std::pair<std::string, std::string>> SplitCompletion(std::string_view completion) {
  std::optional<std::string> source;
  std::optional<std::string> target;
  std::vector<std::string> lines = SplitLines(completion);
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string_view t = Trim(lines[i]);
    if (!StartsWith(t, "```")) continue;
    std::string info = ToLower(Trim(t.substr(3)));
    std::string body;
    size_t j = i + 1;
    for (; j < lines.size() && !StartsWith(Trim(lines[j]), "```"); ++j) body += lines[j] + "\n";
    if (j == lines.size()) break;  // unterminated fence
    if (info == "source" && !source) source = body;
    if (info == "target" && !target) target = body;
    i = j;
  }
  if (!source || !target) return std::nullopt;
  return std::make_pair(*source, *target);
}

GenerateResult GeneratePairs(const std::vector<prompt::Prompt>& api_prompts,
                             backend::CodeModel& model, const GenerateOptions& options) {
  GenerateResult result;
  if (api_prompts.empty() || options.per_api_limit <= 0) return result;
  int budget = options.retry_factor * options.per_api_limit;
  for (int attempt = 0; attempt < budget &&
                        static_cast<int>(result.pairs.size()) < options.per_api_limit;
       ++attempt) {
    const prompt::Prompt& p = api_prompts[attempt % api_prompts.size()];
    ++result.attempts;
    backend::CompletionRequest req;
    req.prompt = p.Render();
    req.temperature = options.temperature;
    req.max_new_tokens = options.max_new_tokens;
    std::string completion;
    try {
      completion = model.Complete(req);
    } catch (const Error& e) {
      ++result.failures;
      result.diagnostics.push_back(p.Id() + ": backend: " + e.what());
      continue;
    }
    auto split = SplitCompletion(completion);
    if (!split) {
      ++result.failures;
      result.diagnostics.push_back(p.Id() + ": completion lacks source/target blocks");
      continue;
    }
    CodePair pair;
    pair.api = p.api;
    pair.library = p.library;
    pair.source_code = split->first;
    pair.target_code = split->second;
    pair.prompt_ref = p.Id();
    pair.pair_index = static_cast<int>(result.pairs.size());
    Verdict v = ValidatePair(pair, options.source_library, p.library);
    if (v != Verdict::kAccept) {
      ++result.failures;
      result.diagnostics.push_back(p.Id() + ": " + VerdictName(v));
      continue;
    }
    result.pairs.push_back(std::move(pair));
  }
  return result;
}

// ---- storage ------------------------------------------------------------------

fs::path PairPath(const fs::path& root, const CodePair& pair) {
  return root / SanitizeName(pair.library) / SanitizeName(pair.api) /
         (std::to_string(pair.pair_index) + ".pair");
}

std::string FormatPair(const CodePair& pair) {
  auto block = [](const std::string& code) {
    std::string c = code;
    if (!c.empty() && c.back() != '\n') c += '\n';
    return c;
  };
  return "# api: " + pair.api + "\n# library: " + pair.library + "\n# prompt: " +
         pair.prompt_ref + "\n# pair_index: " + std::to_string(pair.pair_index) +
         "\n```source\n" + block(pair.source_code) + "```\n```target\n" +
         block(pair.target_code) + "```\n";
}

CodePair ParsePairFile(std::string_view text, const std::string& origin) {
  CodePair pair;
  bool has_index = false;
  for (const std::string& line : SplitLines(text)) {
    if (!StartsWith(line, "# ")) break;
    size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key(Trim(std::string_view(line).substr(2, colon - 2)));
    std::string value(Trim(std::string_view(line).substr(colon + 1)));
    if (key == "api") pair.api = value;
    if (key == "library") pair.library = value;
    if (key == "prompt") pair.prompt_ref = value;
    if (key == "pair_index") {
      pair.pair_index = std::stoi(value);
      has_index = true;
    }
  }
  auto split = SplitCompletion(text);
  if (!split || pair.api.empty() || !has_index) {
    throw ParseError(origin + ": malformed pair file");
  }
  pair.source_code = split->first;
  pair.target_code = split->second;
  return pair;
}

std::vector<CodePair> LoadPairs(const fs::path& root, const std::string& library) {
  std::vector<CodePair> out;
  fs::path dir = root / SanitizeName(library);
  if (!fs::exists(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pair") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) out.push_back(ParsePairFile(ReadFile(f), f.string()));
  std::stable_sort(out.begin(), out.end(), [](const CodePair& a, const CodePair& b) {
    return a.api != b.api ? a.api < b.api : a.pair_index < b.pair_index;
  });
  return out;
}

// ---- mutation -------------------------------------------------------------------

std::vector<LiteralUnit> MutableLiterals(const CodePair& pair) {
  struct Lit {
    char side;
    const py::NumericLiteral* lit;
    std::optional<double> value;
  };
  py::Module s;
  py::Module t;
  try {
    s = py::Parse(pair.source_code);
    t = py::Parse(pair.target_code);
  } catch (const py::SyntaxError&) {
    return {};
  }
  auto inputs = [](const py::Module& m, char side) {
    std::vector<Lit> out;
    for (const py::NumericLiteral& n : m.numbers) {
      if (n.call < 0) continue;
      out.push_back({side, &n, py::EvalNumeric(n.text)});
    }
    return out;
  };
  std::vector<Lit> sl = inputs(s, 'S');
  std::vector<Lit> tl = inputs(t, 'T');
  std::vector<bool> t_used(tl.size(), false);
  std::vector<LiteralUnit> units;
  auto site = [](const Lit& l) {
    return LiteralUnit::Site{l.side, l.lit->begin, l.lit->end, l.lit->text};
  };
  for (const Lit& a : sl) {
    LiteralUnit u;
    u.sites.push_back(site(a));
    u.is_float = a.lit->is_float;
    for (size_t j = 0; j < tl.size(); ++j) {
      const Lit& b = tl[j];
      if (t_used[j] || !a.value || !b.value || *a.value != *b.value) continue;
      if (a.lit->arg_index != b.lit->arg_index || a.lit->arg_keyword != b.lit->arg_keyword) continue;
      t_used[j] = true;
      u.sites.push_back(site(b));
      u.is_float = u.is_float || b.lit->is_float;
      break;
    }
    units.push_back(std::move(u));
  }
  for (size_t j = 0; j < tl.size(); ++j) {
    if (t_used[j]) continue;
    LiteralUnit u;
    u.sites.push_back(site(tl[j]));
    u.is_float = tl[j].lit->is_float;
    units.push_back(std::move(u));
  }
  return units;
}

namespace {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string FloatText(double v) {
  std::string s = FormatDouble(v);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

std::string DrawValue(bool is_float, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    double r = unit(rng);
    if (r < 0.40) {
      double v = std::uniform_real_distribution<double>(-10.0, 10.0)(rng);
      if (is_float) return FloatText(v);
      return std::to_string(std::llround(v));
    }
    if (r < 0.60) {
      int64_t v = std::uniform_int_distribution<int64_t>(-(int64_t{1} << 31), int64_t{1} << 31)(rng);
      return is_float ? std::to_string(v) + ".0" : std::to_string(v);
    }
    if (r < 0.75) {
      static const char* kFloat[] = {"0.0", "-0.0", "1.0"};
      static const char* kInt[] = {"0", "0", "1"};
      size_t k = std::uniform_int_distribution<size_t>(0, 2)(rng);
      return is_float ? kFloat[k] : kInt[k];
    }
    if (r < 0.90) {
      static const char* kFloat[] = {"1e38", "-1e38", "1e-38", "-1e-38", "1e308", "-1e308"};
      static const char* kInt[] = {"2147483648",          "-2147483648",
                                   "9223372036854775807", "-9223372036854775807",
                                   "100000000000000000000", "-100000000000000000000"};
      size_t k = std::uniform_int_distribution<size_t>(0, 5)(rng);
      return is_float ? kFloat[k] : kInt[k];
    }
    if (!is_float) continue;  // non-finite values only replace float literals
    static const char* kSpecial[] = {"float('nan')", "float('inf')", "-float('inf')"};
    return kSpecial[std::uniform_int_distribution<size_t>(0, 2)(rng)];
  }
}

namespace {

// Parenthesizes negative replacements unless the literal stands alone
// between argument/element delimiters.
std::string Placed(const std::string& text, size_t begin, size_t end, const std::string& value) {
  if (value.empty() || value[0] != '-') return value;
  size_t p = begin;
  while (p > 0 && (text[p - 1] == ' ' || text[p - 1] == '\t')) --p;
  size_t q = end;
  while (q < text.size() && (text[q] == ' ' || text[q] == '\t')) ++q;
  bool open = p > 0 && std::string_view("([{,=:").find(text[p - 1]) != std::string_view::npos;
  bool close = q < text.size() && std::string_view(")]},").find(text[q]) != std::string_view::npos;
  return open && close ? value : "(" + value + ")";
}

std::string Apply(const std::string& text, std::vector<Edit> edits) {
  std::sort(edits.begin(), edits.end(),
            [](const Edit& a, const Edit& b) { return a.position > b.position; });
  std::string out = text;
  for (const Edit& e : edits) out.replace(e.position, e.old_value.size(), e.new_value);
  return out;
}

}  // namespace

std::vector<MutatedPair> MutatePair(const CodePair& pair, int m, uint64_t rng_seed) {
  if (m < 1) throw ConfigError("mutation count must be at least 1");
  std::vector<LiteralUnit> units = MutableLiterals(pair);
  std::vector<MutatedPair> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) {
    MutatedPair mp;
    mp.parent = pair.Id();
    mp.api = pair.api;
    mp.library = pair.library;
    mp.mutation_index = i;
    mp.rng_seed = SplitMix64(rng_seed + static_cast<uint64_t>(i));
    if (units.empty()) {
      mp.unmutated = true;
      mp.source_code = pair.source_code;
      mp.target_code = pair.target_code;
      out.push_back(std::move(mp));
      continue;
    }
    std::mt19937_64 rng(mp.rng_seed);
    std::vector<bool> chosen(units.size());
    do {
      for (size_t u = 0; u < units.size(); ++u) chosen[u] = (rng() & 1) != 0;
    } while (std::none_of(chosen.begin(), chosen.end(), [](bool b) { return b; }));
    std::vector<Edit> s_edits;
    std::vector<Edit> t_edits;
    for (size_t u = 0; u < units.size(); ++u) {
      if (!chosen[u]) continue;
      std::string value = DrawValue(units[u].is_float, rng);
      for (const LiteralUnit::Site& site : units[u].sites) {
        const std::string& text = site.side == 'S' ? pair.source_code : pair.target_code;
        Edit e{site.side, site.begin, site.text, Placed(text, site.begin, site.end, value)};
        (site.side == 'S' ? s_edits : t_edits).push_back(e);
        mp.edits.push_back(std::move(e));
      }
    }
    mp.source_code = Apply(pair.source_code, s_edits);
    mp.target_code = Apply(pair.target_code, t_edits);
    out.push_back(std::move(mp));
  }
  return out;
}

std::string EditSummary(const std::vector<Edit>& edits) {
  std::vector<std::string> parts;
  for (const Edit& e : edits) {
    parts.push_back(std::string(1, e.side) + "@" + std::to_string(e.position) + ":" + e.old_value +
                    "->" + e.new_value);
  }
  return parts.empty() ? "unmutated" : Join(parts, ";");
}

std::string MutatedToLine(const MutatedPair& mp) {
  json edits = json::array();
  for (const Edit& e : mp.edits) {
    edits.push_back({{"side", std::string(1, e.side)},
                     {"position", e.position},
                     {"old", e.old_value},
                     {"new", e.new_value}});
  }
  json j = {{"parent", mp.parent},         {"api", mp.api},
            {"library", mp.library},       {"mutation_index", mp.mutation_index},
            {"seed", mp.rng_seed},         {"unmutated", mp.unmutated},
            {"edits", edits},              {"source", mp.source_code},
            {"target", mp.target_code}};
  return j.dump();
}

MutatedPair MutatedFromLine(std::string_view line) {
  MutatedPair mp;
  try {
    json j = json::parse(line);
    mp.parent = j.at("parent").get<std::string>();
    mp.api = j.at("api").get<std::string>();
    mp.library = j.at("library").get<std::string>();
    mp.mutation_index = j.at("mutation_index").get<int>();
    mp.rng_seed = j.at("seed").get<uint64_t>();
    mp.unmutated = j.at("unmutated").get<bool>();
    for (const json& e : j.at("edits")) {
      mp.edits.push_back({e.at("side").get<std::string>().at(0), e.at("position").get<size_t>(),
                          e.at("old").get<std::string>(), e.at("new").get<std::string>()});
    }
    mp.source_code = j.at("source").get<std::string>();
    mp.target_code = j.at("target").get<std::string>();
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed mutated pair: ") + e.what());
  }
  return mp;
}

}  // namespace futur::pairs
