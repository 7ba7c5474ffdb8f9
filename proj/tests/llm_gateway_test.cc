// Copyright 2026 The Instrx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "instrx/chunker.h"
#include "instrx/llm_gateway.h"

#include <atomic>
#include <chrono>
#include <thread>

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "instrx/error.h"
#include "support/test_util.h"

namespace instrx {
namespace {

using nlohmann::json;

json ListSchema() {
  return json::parse(R"({"type":"object","required":["instruments"],"properties":
      {"instruments":{"type":"array","items":{"type":"string"},"maxItems":5}}})");
}

PromptRequest Request(std::string id, std::optional<json> schema = ListSchema()) {
  PromptRequest r;
  r.request_id = std::move(id);
  r.system_text = "You extract instruments.";
  r.user_text = "Passage:\n\"CLASS\" observed in pré-k.\tEnd";
  r.response_schema = std::move(schema);
  return r;
}

std::shared_ptr<TranscriptBackend> Transcript(const PromptRequest& r,
                                              std::vector<std::string> responses) {
  return std::make_shared<TranscriptBackend>(
      std::map<std::string, std::vector<std::string>>{{Fingerprint(r), std::move(responses)}});
}

RetryPolicy FastPolicy() { return {2, 2, 1, 4}; }

// Local stand-in for a chat completion endpoint. `handler` gets the call
// number starting at 1.
class FakeServer {
 public:
  explicit FakeServer(std::function<void(int, const json&, httplib::Response&)> handler)
      : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      handler_(++calls_, json::parse(req.body), res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int calls() const { return calls_; }
  std::string last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  std::function<void(int, const json&, httplib::Response&)> handler_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::string last_auth_;
};

json Completion(const std::string& content) {
  return {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}},
          {"usage", {{"prompt_tokens", 17}, {"completion_tokens", 3}}}};
}

TEST_SUITE("llm_gateway") {

TEST_CASE("fingerprint matches the independent digest") {
  // Constants from a separate implementation: SHA-256 of the compact,
  // key-sorted, non-ASCII-preserving JSON array
  // ["instrx-fp-v1", system, user, schema or null, "%.4f" temperature].
  PromptRequest r = Request("a");
  CHECK(Fingerprint(r) == "27254509c550532899dceada25114d97a23f3c00c9e8aff92d4ebe82195ed8ce");
  r.temperature = 0.2;
  CHECK(Fingerprint(r) == "afe369cbb78fb7604d59ba6d20d5bcbd898217a5904fa0a56f0aed1efd4801ea");
  PromptRequest plain;
  plain.user_text = "Summarize this.";
  CHECK(Fingerprint(plain) == "8b97e6013460552527d095a3e38c6de01f12d02d414d9609061554cce0a2becc");
}

TEST_CASE("fingerprint ignores request id and token limit") {
  PromptRequest a = Request("x");
  PromptRequest b = Request("y");
  b.max_output_tokens = 10;
  CHECK(Fingerprint(a) == Fingerprint(b));
  b.user_text += " ";
  CHECK(Fingerprint(a) != Fingerprint(b));
}

TEST_CASE("sha256 known vector") {
  CHECK(Sha256Hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("valid structured reply on the first attempt") {
  const PromptRequest r = Request("doc/extraction/0");
  Gateway gateway(Transcript(r, {R"({"instruments":["CLASS"]})"}), FastPolicy());
  const CompletionResult out = gateway.Complete(r);
  CHECK(out.attempts == 1);
  REQUIRE(out.parsed.has_value());
  CHECK((*out.parsed)["instruments"][0] == "CLASS");
  const std::int64_t in = CountTokens(r.system_text) + CountTokens(r.user_text);
  CHECK(out.usage.input_tokens == in);
  CHECK(out.usage.output_tokens == CountTokens(out.text));
  CHECK(out.usage.wall_time_ms == SimulatedLatencyMs(in, out.usage.output_tokens));
  CHECK(gateway.TotalUsage() == out.usage);
}

TEST_CASE("malformed then valid takes two attempts") {
  const PromptRequest r = Request("doc/extraction/1");
  Gateway gateway(Transcript(r, {"{\"instruments\": [\"CLASS\"", R"({"instruments":["CLASS"]})"}),
                  FastPolicy());
  const CompletionResult out = gateway.Complete(r);
  CHECK(out.attempts == 2);
  REQUIRE(out.parsed.has_value());
  CHECK(out.usage.output_tokens > CountTokens(out.text));
}

TEST_CASE("schema violations exhaust the repair budget") {
  const PromptRequest r = Request("doc/extraction/2");
  Gateway gateway(Transcript(r, {"[]", R"({"instruments":"CLASS"})", R"({"other":1})"}),
                  FastPolicy());
  try {
    gateway.Complete(r);
    FAIL("expected SchemaViolation");
  } catch (const SchemaViolation& e) {
    CHECK(e.attempts() == 3);
    CHECK(e.last_raw_text() == R"({"other":1})");
    CHECK(e.usage().output_tokens > 0);
  }
}

TEST_CASE("fenced model output is accepted") {
  const PromptRequest r = Request("doc/extraction/3");
  Gateway gateway(Transcript(r, {"```json\n{\"instruments\":[]}\n```"}), FastPolicy());
  CHECK(gateway.Complete(r).parsed.has_value());
}

TEST_CASE("transcript miss names the request") {
  const PromptRequest r = Request("doc7/decision");
  Gateway gateway(std::make_shared<TranscriptBackend>(
                      std::map<std::string, std::vector<std::string>>{}),
                  FastPolicy());
  try {
    gateway.Complete(r);
    FAIL("expected a miss");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == ErrorKind::kTranscriptMiss);
    CHECK(std::string(e.what()).find("doc7/decision") != std::string::npos);
  }
}

TEST_CASE("a miss on a repair attempt is still a miss") {
  const PromptRequest r = Request("doc/extraction/9");
  Gateway gateway(Transcript(r, {"not json"}), FastPolicy());
  try {
    gateway.Complete(r);
    FAIL("expected a miss");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == ErrorKind::kTranscriptMiss);
    CHECK(std::string(e.what()).find("attempt 2") != std::string::npos);
  }
}

TEST_CASE("duplicate request ids and invalid requests are rejected") {
  const PromptRequest r = Request("same");
  Gateway gateway(Transcript(r, {R"({"instruments":[]})"}), FastPolicy());
  gateway.Complete(r);
  CHECK_THROWS_AS(gateway.Complete(r), Error);
  PromptRequest bad = Request("t");
  bad.temperature = 2.5;
  CHECK_THROWS_AS(gateway.Complete(bad), Error);
  bad = Request("u");
  bad.user_text.clear();
  CHECK_THROWS_AS(gateway.Complete(bad), Error);
}

TEST_CASE("transcript file round trip through the recorder") {
  testing::TempDir dir("gw");
  const PromptRequest r = Request("a/extraction/0");
  auto recorder = std::make_shared<RecordingBackend>(Transcript(r, {"bad", R"({"instruments":[]})"}));
  Gateway gateway(recorder, FastPolicy());
  CHECK(gateway.Complete(r).attempts == 2);
  recorder->WriteTranscript(dir / "t.jsonl");
  auto replay = TranscriptBackend::FromFile(dir / "t.jsonl");
  CHECK(replay->size() == 1);
  Gateway again(replay, FastPolicy());
  CHECK(again.Complete(r).attempts == 2);

  testing::WriteText(dir / "bad.jsonl", "{\"fingerprint\": 3}\n");
  try {
    TranscriptBackend::FromFile(dir / "bad.jsonl");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMalformedInput);
    CHECK(std::string(e.what()).find(":1") != std::string::npos);
  }
}

TEST_CASE("live backend against a local endpoint") {
  FakeServer server([](int call, const json& body, httplib::Response& res) {
    if (call == 1) {
      res.status = 429;
      return;
    }
    CHECK(body["model"] == "test-model");
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["response_format"]["type"] == "json_object");
    res.set_content(Completion(R"({"instruments":["CLASS"]})").dump(), "application/json");
  });
  ::setenv("INSTRX_TEST_KEY", "sk-test", 1);
  LiveBackendConfig config;
  config.base_url = server.base_url();
  config.model = "test-model";
  config.api_key_env = "INSTRX_TEST_KEY";
  Gateway gateway(std::make_shared<HttpChatBackend>(config), FastPolicy());
  const CompletionResult out = gateway.Complete(Request("live/1"));
  CHECK(server.calls() == 2);
  CHECK(server.last_auth() == "Bearer sk-test");
  CHECK(out.usage.input_tokens == 17);
  CHECK(out.usage.output_tokens == 3);
  CHECK(out.usage.backend_name == "live:test-model");
  REQUIRE(out.parsed.has_value());
}

TEST_CASE("client errors are fatal, persistent 429 is rate limiting") {
  FakeServer bad_request([](int, const json&, httplib::Response& res) {
    res.status = 400;
    res.set_content("bad", "text/plain");
  });
  LiveBackendConfig config;
  config.base_url = bad_request.base_url();
  Gateway gateway(std::make_shared<HttpChatBackend>(config), FastPolicy());
  try {
    gateway.Complete(Request("live/2"));
    FAIL("expected an error");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == ErrorKind::kBackendUnavailable);
  }
  CHECK(bad_request.calls() == 1);

  FakeServer limited([](int, const json&, httplib::Response& res) { res.status = 429; });
  config.base_url = limited.base_url();
  Gateway throttled(std::make_shared<HttpChatBackend>(config), FastPolicy());
  try {
    throttled.Complete(Request("live/3"));
    FAIL("expected an error");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == ErrorKind::kRateLimited);
  }
  CHECK(limited.calls() == 3);
}

TEST_CASE("unreachable endpoint reports measured time") {
  LiveBackendConfig config;
  config.base_url = "http://127.0.0.1:1/v1";
  config.connect_timeout_ms = 200;
  Gateway gateway(std::make_shared<HttpChatBackend>(config), RetryPolicy{2, 0, 5, 10});
  try {
    gateway.Complete(Request("live/4"));
    FAIL("expected an error");
  } catch (const GatewayError& e) {
    CHECK(e.kind() == ErrorKind::kBackendUnavailable);
    CHECK(e.usage().wall_time_ms > 0);
    CHECK(std::string(e.what()).find("3 tries") != std::string::npos);
  }
}

TEST_CASE("rate limiter spaces requests") {
  RateLimiter unlimited(0);
  for (int i = 0; i < 1000; ++i) unlimited.Acquire();

  RateLimiter limiter(1200);  // 20 per second, burst of 20
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 26; ++i) limiter.Acquire();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  CHECK(ms >= 250);
  CHECK(ms < 2000);
}

TEST_CASE("concurrent completions account every call") {
  std::map<std::string, std::vector<std::string>> responses;
  std::vector<PromptRequest> requests;
  for (int i = 0; i < 32; ++i) {
    PromptRequest r = Request("c/" + std::to_string(i));
    r.user_text += std::to_string(i);
    responses[Fingerprint(r)] = {R"({"instruments":[]})"};
    requests.push_back(r);
  }
  Gateway gateway(std::make_shared<TranscriptBackend>(responses), FastPolicy());
  std::vector<std::thread> threads;
  std::vector<UsageStats> usage(requests.size());
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t i = t; i < requests.size(); i += 4) usage[i] = gateway.Complete(requests[i]).usage;
    });
  }
  for (auto& th : threads) th.join();
  UsageStats sum;
  sum.backend_name = "mock";
  for (const auto& u : usage) sum += u;
  CHECK(gateway.TotalUsage() == sum);
}

}  // TEST_SUITE

}  // namespace
}  // namespace instrx
