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

#include <gtest/gtest.h>
#include <stdlib.h>

#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "test_fixtures.h"

namespace futur::backend {
namespace {

TEST(MockTest, LongestContainedKeyWins) {
  MockRulebook book = MockRulebook::Parse(
      "# canned pairs\n"
      "eye >>> short\n%%\n"
      "mlx.core.eye >>>\n```target\nmx.eye(3)\n```\n%%\n"
      "\n"
      "sum >>> s\n");
  EXPECT_EQ(book.size(), 3u);
  CompletionRequest r;
  r.prompt = "test the API `mlx.core.eye` please";
  EXPECT_EQ(book.Complete(r), "```target\nmx.eye(3)\n```\n");
  EXPECT_EQ(book.Complete(r), book.Complete(r));
  r.prompt = "an eye for an eye";
  EXPECT_EQ(book.Complete(r), "short\n");
  r.prompt = "cumsum";
  EXPECT_EQ(book.Complete(r), "s\n");
  r.prompt = "nothing here";
  try {
    book.Complete(r);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.code(), "mock_miss");
  }
  EXPECT_THROW(MockRulebook::Parse("no separator\n"), ParseError);
}

TEST(DescriptorTest, ExactlyOneLocator) {
  BackendDescriptor d;
  EXPECT_THROW(d.Validate(), ConfigError);
  d.rulebook_path = "x";
  EXPECT_NO_THROW(d.Validate());
  d.endpoint_url = "http://h/x";
  EXPECT_THROW(d.Validate(), ConfigError);
  d.rulebook_path.clear();
  EXPECT_THROW(d.Validate(), ConfigError);  // kind still says mock
  d.kind = BackendDescriptor::Kind::kHttpEndpoint;
  EXPECT_NO_THROW(d.Validate());
}

class StubServer {
 public:
  explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/completions", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/completions"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST(HttpTest, NormalizesReplyShapesAndSendsRequestFields) {
  int calls = 0;
  StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    EXPECT_EQ(body["model_id"], "m1");
    EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.4);
    EXPECT_EQ(body["max_new_tokens"], 512);
    EXPECT_EQ(req.get_header_value("Authorization"), "Bearer s3cret");
    std::string p = body["prompt"];
    nlohmann::json reply;
    if (calls++ % 3 == 0) {
      reply = {{"choices", {{{"text", "A:" + p}}}}};
    } else if (calls % 3 == 2) {
      reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "B:" + p}}}}}}};
    } else {
      reply = {{"completion", "C:" + p}};
    }
    res.set_content(reply.dump(), "application/json");
  });
  setenv("FUTUR_TEST_TOKEN", "s3cret", 1);
  BackendDescriptor d;
  d.kind = BackendDescriptor::Kind::kHttpEndpoint;
  d.endpoint_url = stub.url();
  d.auth_env = "FUTUR_TEST_TOKEN";
  d.model_id = "m1";
  auto model = MakeBackend(d);
  CompletionRequest r;
  r.prompt = "fixture";
  EXPECT_EQ(model->Complete(r), "A:fixture");
  EXPECT_EQ(model->Complete(r), "B:fixture");
  EXPECT_EQ(model->Complete(r), "C:fixture");
}

TEST(HttpTest, RetriesServerErrorsButNotClientErrors) {
  int calls = 0;
  StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    if (req.body.find("bad") != std::string::npos) {
      res.status = 400;
      return;
    }
    if (calls < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"completion": "ok"})", "application/json");
  });
  BackendDescriptor d;
  d.kind = BackendDescriptor::Kind::kHttpEndpoint;
  d.endpoint_url = stub.url();
  d.backoff_ms = 1;
  HttpModel model(d);
  CompletionRequest r;
  r.prompt = "fine";
  EXPECT_EQ(model.Complete(r), "ok");
  EXPECT_EQ(calls, 3);
  r.prompt = "bad";
  EXPECT_THROW(model.Complete(r), BackendError);
  d.max_retries = 1;
  d.endpoint_url = "http://127.0.0.1:1/v1/completions";
  d.timeout_s = 1;
  EXPECT_THROW(HttpModel(d).Complete(r), TransportError);
}

struct FakeClock {
  using duration = std::chrono::milliseconds;
  using rep = duration::rep;
  using period = duration::period;
  using time_point = std::chrono::time_point<FakeClock, duration>;
  static constexpr bool is_steady = true;
};

TEST(LimiterTest, NoWindowExceedsTheLimit) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    size_t limit = 1 + rng() % 10;
    SlidingWindowLimiter<FakeClock> limiter(limit, std::chrono::seconds(60));
    FakeClock::time_point now{};
    std::vector<FakeClock::time_point> departures;
    for (int i = 0; i < 300; ++i) {
      now += std::chrono::milliseconds(rng() % 20000);
      auto wait = limiter.TryAcquire(now);
      if (wait) {
        EXPECT_GT(wait->count(), 0);
        now += *wait;
        ASSERT_FALSE(limiter.TryAcquire(now).has_value());
      }
      departures.push_back(now);
    }
    for (size_t i = 0; i < departures.size(); ++i) {
      size_t in_window = 0;
      for (size_t j = i; j < departures.size() && departures[j] < departures[i] + std::chrono::seconds(60); ++j) {
        ++in_window;
      }
      EXPECT_LE(in_window, limit);
    }
  }
}

TEST(RequestTest, ConvertAndGenerateThroughMock) {
  MockRulebook book = MockRulebook::Parse(
      "torch.eye(2147483648) >>> Here you go:\n```python\nimport mlx.core as mx\nmx.eye(2147483648)\n"
      "```\n```python\nignored\n```\n%%\n"
      "prose only >>> I cannot convert that.\n%%\n"
      "`mlx.core.full` >>>\n```\nimport mlx.core as mx\nmx.full((2,), 1.0)\n```\n");
  EXPECT_EQ(ConvertCode("import torch\ntorch.eye(2147483648)\n", "mlx", book),
            "import mlx.core as mx\nmx.eye(2147483648)\n");
  try {
    ConvertCode("# prose only\n", "mlx", book);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.code(), "empty_conversion");
  }
  EXPECT_EQ(GenerateCode("mlx.core.full", "mlx", book), "import mlx.core as mx\nmx.full((2,), 1.0)\n");
  EXPECT_NE(ConversionPrompt("x", "MLX").find(
                "Convert this code to code that uses the target library (MLX)"),
            std::string::npos);
}

TEST(RequestTest, FirstBlockOnly) {
  EXPECT_EQ(*ExtractFirstCodeBlock("a\n```py\nx\n```\n```\ny\n```\n"), "x\n");
  EXPECT_FALSE(ExtractFirstCodeBlock("no code").has_value());
  EXPECT_EQ(*ExtractFirstCodeBlock("```\nunterminated\n"), "unterminated\n");
}

}  // namespace
}  // namespace futur::backend
