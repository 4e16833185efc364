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

// Code-model backends: an HTTP completion endpoint and a deterministic
// rulebook mock, plus the conversion/generation requests built on them.

#ifndef FUTUR_BACKEND_H_
#define FUTUR_BACKEND_H_

#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "futur/util.h"

namespace futur::backend {

// Non-retryable backend failure. `code` is one of "mock_miss",
// "empty_conversion", "http_status", "bad_response".
class BackendError : public Error {
 public:
  BackendError(std::string code, const std::string& what)
      : Error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

inline constexpr double kDefaultTemperature = 0.4;
inline constexpr int kGenerationMaxTokens = 512;
inline constexpr int kConversionMaxTokens = 1024;

struct CompletionRequest {
  std::string prompt;
  double temperature = kDefaultTemperature;
  int max_new_tokens = kGenerationMaxTokens;
  std::vector<std::string> stop_sequences;
  std::string model_id;
};

class CodeModel {
 public:
  virtual ~CodeModel() = default;
  // Throws TransportError (retryable, already retried) or BackendError.
  virtual std::string Complete(const CompletionRequest& request) = 0;
};

struct BackendDescriptor {
  enum class Kind { kHttpEndpoint, kMockRulebook };
  Kind kind = Kind::kMockRulebook;
  std::string endpoint_url;    // e.g. http://127.0.0.1:8000/v1/completions
  fs::path rulebook_path;
  std::string auth_env;        // name of the environment variable holding a bearer token
  std::string model_id;
  double requests_per_minute = 0;  // 0 disables limiting
  int max_retries = 3;
  int backoff_ms = 500;
  int timeout_s = 120;

  // Throws ConfigError unless exactly one locator matches the kind.
  void Validate() const;
};

std::unique_ptr<CodeModel> MakeBackend(const BackendDescriptor& descriptor);

// ---- mock -------------------------------------------------------------------

// Rulebook text: blocks that start with a `KEY >>> first line` line and run
// to a line holding only `%%` (or end of file). Lines starting with `#`
// between blocks are comments. The completion is the rest of the key line
// followed by the block's remaining lines.
class MockRulebook : public CodeModel {
 public:
  static MockRulebook Parse(std::string_view text);
  static MockRulebook Load(const fs::path& path);

  // Longest key contained in the prompt wins; ties go to the earlier rule.
  std::string Complete(const CompletionRequest& request) override;

  size_t size() const { return rules_.size(); }

 private:
  std::vector<std::pair<std::string, std::string>> rules_;
};

// ---- http -------------------------------------------------------------------

// POSTs {model_id, prompt, temperature, max_new_tokens, stop}. Accepts
// `choices[0].text`, `choices[0].message.content` or `completion` replies.
class HttpModel : public CodeModel {
 public:
  explicit HttpModel(BackendDescriptor descriptor);
  std::string Complete(const CompletionRequest& request) override;

 private:
  BackendDescriptor d_;
  std::string origin_;
  std::string path_;
};

// ---- rate limiting ------------------------------------------------------------

// At most `limit` departures inside any window of length `window`.
template <class Clock = std::chrono::steady_clock>
class SlidingWindowLimiter {
 public:
  using time_point = typename Clock::time_point;
  using duration = typename Clock::duration;

  SlidingWindowLimiter(size_t limit, duration window) : limit_(limit), window_(window) {}

  // Records a departure at `now` and returns nullopt, or returns how long
  // the caller must wait before trying again.
  std::optional<duration> TryAcquire(time_point now) {
    std::lock_guard<std::mutex> lock(mu_);
    while (!departures_.empty() && departures_.front() + window_ <= now) departures_.pop_front();
    if (departures_.size() < limit_) {
      departures_.push_back(now);
      return std::nullopt;
    }
    return departures_.front() + window_ - now;
  }

  void Acquire() {
    for (;;) {
      auto wait = TryAcquire(Clock::now());
      if (!wait) return;
      std::this_thread::sleep_for(*wait);
    }
  }

 private:
  size_t limit_;
  duration window_;
  std::mutex mu_;
  std::deque<time_point> departures_;
};

class RateLimitedModel : public CodeModel {
 public:
  RateLimitedModel(std::unique_ptr<CodeModel> inner, double requests_per_minute);
  std::string Complete(const CompletionRequest& request) override;

 private:
  std::unique_ptr<CodeModel> inner_;
  SlidingWindowLimiter<> limiter_;
};

// ---- requests -------------------------------------------------------------------

// "Convert this code to code that uses the target library (<NAME>)".
std::string ConversionProblem(const std::string& library_display_name);
// Same wording for the reverse direction ("... the source library (<NAME>)").
std::string ReverseConversionProblem(const std::string& library_display_name);

// First fenced block's body; nullopt when the text has none.
std::optional<std::string> ExtractFirstCodeBlock(std::string_view completion);

std::string ConversionPrompt(const std::string& source_code, const std::string& target_display);
std::string GenerationPrompt(const std::string& api_name, const std::string& target_display);

// Throws BackendError("empty_conversion") when the completion has no code block.
std::string ConvertCode(const std::string& source_code, const std::string& target_library,
                        CodeModel& model, double temperature = kDefaultTemperature,
                        int max_new_tokens = kConversionMaxTokens);
std::string GenerateCode(const std::string& api_name, const std::string& target_library,
                         CodeModel& model, double temperature = kDefaultTemperature,
                         int max_new_tokens = kGenerationMaxTokens);
// Source-library counterpart of a generated target program.
std::string ConvertToSource(const std::string& target_code, const std::string& source_library,
                            CodeModel& model, double temperature = kDefaultTemperature,
                            int max_new_tokens = kConversionMaxTokens);

}  // namespace futur::backend

#endif  // FUTUR_BACKEND_H_
