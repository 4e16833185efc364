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

#include "futur/backend.h"

#include <cmath>
#include <cstdlib>

#include "futur/prompt.h"
#include "httplib.h"
#include "json.hpp"

namespace futur::backend {

using nlohmann::json;

void BackendDescriptor::Validate() const {
  bool has_url = !endpoint_url.empty();
  bool has_book = !rulebook_path.empty();
  if (has_url == has_book) {
    throw ConfigError("backend needs exactly one of endpoint_url and rulebook_path");
  }
  if (kind == Kind::kHttpEndpoint && !has_url) {
    throw ConfigError("http backend without endpoint_url");
  }
  if (kind == Kind::kMockRulebook && !has_book) {
    throw ConfigError("mock backend without rulebook_path");
  }
  if (requests_per_minute < 0) throw ConfigError("negative rate limit");
}

std::unique_ptr<CodeModel> MakeBackend(const BackendDescriptor& d) {
  d.Validate();
  std::unique_ptr<CodeModel> model;
  if (d.kind == BackendDescriptor::Kind::kMockRulebook) {
    model = std::make_unique<MockRulebook>(MockRulebook::Load(d.rulebook_path));
  } else {
    model = std::make_unique<HttpModel>(d);
  }
  if (d.requests_per_minute > 0) {
    model = std::make_unique<RateLimitedModel>(std::move(model), d.requests_per_minute);
  }
  return model;
}

// ---- mock -------------------------------------------------------------------

MockRulebook MockRulebook::Parse(std::string_view text) {
  MockRulebook book;
  std::vector<std::string> lines = SplitLines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string& l = lines[i];
    if (Trim(l).empty() || StartsWith(Trim(l), "#")) continue;
    size_t sep = l.find(" >>>");
    if (sep == std::string::npos) {
      throw ParseError("rulebook line " + std::to_string(i + 1) + ": expected `KEY >>> ...`");
    }
    std::string key(Trim(std::string_view(l).substr(0, sep)));
    if (key.empty()) throw ParseError("rulebook line " + std::to_string(i + 1) + ": empty key");
    std::string completion;
    std::string_view first = std::string_view(l).substr(sep + 4);
    if (StartsWith(first, " ")) first.remove_prefix(1);
    if (!first.empty()) completion = std::string(first) + "\n";
    for (++i; i < lines.size() && lines[i] != "%%"; ++i) completion += lines[i] + "\n";
    book.rules_.emplace_back(std::move(key), std::move(completion));
  }
  return book;
}

MockRulebook MockRulebook::Load(const fs::path& path) { return Parse(ReadFile(path)); }

std::string MockRulebook::Complete(const CompletionRequest& request) {
  const std::pair<std::string, std::string>* best = nullptr;
  for (const auto& rule : rules_) {
    if (request.prompt.find(rule.first) == std::string::npos) continue;
    if (!best || rule.first.size() > best->first.size()) best = &rule;
  }
  if (!best) {
    std::string head = request.prompt.substr(0, 80);
    throw BackendError("mock_miss", "no rule matches prompt starting " + head);
  }
  return best->second;
}

// ---- http -------------------------------------------------------------------

HttpModel::HttpModel(BackendDescriptor d) : d_(std::move(d)) {
  size_t scheme = d_.endpoint_url.find("://");
  size_t slash = d_.endpoint_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  origin_ = d_.endpoint_url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : d_.endpoint_url.substr(slash);
}

std::string HttpModel::Complete(const CompletionRequest& request) {
  json body = {{"model_id", request.model_id.empty() ? d_.model_id : request.model_id},
               {"prompt", request.prompt},
               {"temperature", request.temperature},
               {"max_new_tokens", request.max_new_tokens},
               {"stop", request.stop_sequences}};
  httplib::Headers headers;
  if (!d_.auth_env.empty()) {
    const char* token = std::getenv(d_.auth_env.c_str());
    if (token && *token) headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  std::string last;
  for (int attempt = 0; attempt <= d_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(d_.backoff_ms << (attempt - 1)));
    httplib::Client client(origin_);
    client.set_connection_timeout(d_.timeout_s);
    client.set_read_timeout(d_.timeout_s);
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      last = "POST " + d_.endpoint_url + " failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last = "POST " + d_.endpoint_url + " returned " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw BackendError("http_status", d_.endpoint_url + " returned " + std::to_string(res->status));
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw BackendError("bad_response", e.what());
    }
    if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
      const json& c = reply["choices"][0];
      if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
      if (c.contains("message") && c["message"].contains("content")) {
        return c["message"]["content"].get<std::string>();
      }
    }
    if (reply.contains("completion") && reply["completion"].is_string()) {
      return reply["completion"].get<std::string>();
    }
    throw BackendError("bad_response", "no completion text in reply");
  }
  throw TransportError(last);
}

// ---- rate limiting ------------------------------------------------------------

RateLimitedModel::RateLimitedModel(std::unique_ptr<CodeModel> inner, double requests_per_minute)
    : inner_(std::move(inner)),
      limiter_(static_cast<size_t>(std::max(1.0, std::floor(requests_per_minute))),
               std::chrono::minutes(1)) {}

std::string RateLimitedModel::Complete(const CompletionRequest& request) {
  limiter_.Acquire();
  return inner_->Complete(request);
}

// ---- requests -------------------------------------------------------------------

std::string ConversionProblem(const std::string& library_display_name) {
  return "Convert this code to code that uses the target library (" + library_display_name + ")";
}

std::string ReverseConversionProblem(const std::string& library_display_name) {
  return "Convert this code to code that uses the source library (" + library_display_name + ")";
}

std::optional<std::string> ExtractFirstCodeBlock(std::string_view completion) {
  std::vector<std::string> lines = SplitLines(completion);
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string_view t = Trim(lines[i]);
    if (!StartsWith(t, "```")) continue;
    std::string body;
    for (size_t j = i + 1; j < lines.size(); ++j) {
      if (StartsWith(Trim(lines[j]), "```")) return body;
      body += lines[j] + "\n";
    }
    return body;  // unterminated fence: keep what was produced
  }
  return std::nullopt;
}

std::string ConversionPrompt(const std::string& source_code, const std::string& target_display) {
  std::string code = source_code;
  if (!code.empty() && code.back() != '\n') code += '\n';
  return ConversionProblem(target_display) + "\n\n```python\n" + code + "```\n";
}

std::string GenerationPrompt(const std::string& api_name, const std::string& target_display) {
  return "Write a self-contained program that uses the target library (" + target_display +
         ") and calls the API `" + api_name +
         "`. Choose inputs that contain NaNs and Infs, edge cases, or values likely to trigger "
         "error checking and crashes. Print the result. Reply with one fenced code block.\n";
}

namespace {

std::string CodeOrThrow(const std::string& completion) {
  std::optional<std::string> code = ExtractFirstCodeBlock(completion);
  if (!code || Trim(*code).empty()) {
    throw BackendError("empty_conversion", "completion holds no code block");
  }
  return *code;
}

}  // namespace

std::string ConvertCode(const std::string& source_code, const std::string& target_library,
                        CodeModel& model, double temperature, int max_new_tokens) {
  CompletionRequest req;
  req.prompt = ConversionPrompt(source_code, prompt::LibraryDisplayName(target_library));
  req.temperature = temperature;
  req.max_new_tokens = max_new_tokens;
  return CodeOrThrow(model.Complete(req));
}

std::string GenerateCode(const std::string& api_name, const std::string& target_library,
                         CodeModel& model, double temperature, int max_new_tokens) {
  CompletionRequest req;
  req.prompt = GenerationPrompt(api_name, prompt::LibraryDisplayName(target_library));
  req.temperature = temperature;
  req.max_new_tokens = max_new_tokens;
  return CodeOrThrow(model.Complete(req));
}

std::string ConvertToSource(const std::string& target_code, const std::string& source_library,
                            CodeModel& model, double temperature, int max_new_tokens) {
  std::string code = target_code;
  if (!code.empty() && code.back() != '\n') code += '\n';
  CompletionRequest req;
  req.prompt = ReverseConversionProblem(prompt::LibraryDisplayName(source_library)) +
               "\n\n```python\n" + code + "```\n";
  req.temperature = temperature;
  req.max_new_tokens = max_new_tokens;
  return CodeOrThrow(model.Complete(req));
}

}  // namespace futur::backend
