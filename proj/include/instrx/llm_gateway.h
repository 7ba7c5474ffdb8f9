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

#ifndef INSTRX_LLM_GATEWAY_H_
#define INSTRX_LLM_GATEWAY_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "instrx/error.h"
#include "instrx/usage.h"

namespace instrx {

struct PromptRequest {
  std::string request_id;
  std::string system_text;
  std::string user_text;
  std::optional<nlohmann::json> response_schema;
  double temperature = 0.0;
  std::int64_t max_output_tokens = 2048;

  // Throws Error(kConfigError) on empty user_text, temperature outside
  // [0, 2] or a non-positive token limit.
  void Validate() const;
};

struct CompletionResult {
  std::string request_id;
  std::string text;
  std::optional<nlohmann::json> parsed;  // iff a schema was given and met
  UsageStats usage;
  int attempts = 1;
};

// Lowercase hex SHA-256 digest.
std::string Sha256Hex(std::string_view data);

// SHA-256 (hex) over system text, user text, schema and temperature. Used as
// the transcript key; request_id and max_output_tokens do not participate.
std::string Fingerprint(const PromptRequest& request);

// What a backend is asked to produce. `attempt` is 1-based and counts schema
// repair rounds; `user_text` includes any repair feedback.
struct BackendCall {
  const PromptRequest& request;
  std::string fingerprint;
  int attempt = 1;
  std::string user_text;
};

struct BackendReply {
  std::string text;
  UsageStats usage;
};

// Retryable transport failure (connection errors, HTTP 5xx, HTTP 429).
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& message, bool rate_limited)
      : std::runtime_error(message), rate_limited_(rate_limited) {}
  bool rate_limited() const { return rate_limited_; }

 private:
  bool rate_limited_;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string name() const = 0;

  // True when reply usage carries a reproducible wall time; the gateway then
  // reports that instead of measured elapsed time.
  virtual bool deterministic_timing() const { return false; }

  // Throws TransportError for retryable failures and GatewayError for fatal
  // ones.
  virtual BackendReply Generate(const BackendCall& call) = 0;
};

// Simulated latency used by the transcript backend, so that offline runs
// produce comparable, reproducible timings.
std::int64_t SimulatedLatencyMs(std::int64_t input_tokens,
                                std::int64_t output_tokens);

// Replays a recorded transcript. File format: JSON Lines, one record per
// request fingerprint:
//
//   {"fingerprint": "<hex>", "responses": ["<attempt 1>", "<attempt 2>"]}
//
// Attempt n of a request receives responses[n-1]. Token usage is counted with
// the chunker's token rule.
class TranscriptBackend : public Backend {
 public:
  explicit TranscriptBackend(
      std::map<std::string, std::vector<std::string>> responses);

  // Throws Error(kIoFailure) or Error(kMalformedInput).
  static std::shared_ptr<TranscriptBackend> FromFile(
      const std::filesystem::path& path);

  std::string name() const override { return "mock"; }
  bool deterministic_timing() const override { return true; }
  BackendReply Generate(const BackendCall& call) override;

  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, std::vector<std::string>> responses_;
};

struct LiveBackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  std::string api_key_env = "OPENAI_API_KEY";
  int connect_timeout_ms = 10000;
  int read_timeout_ms = 120000;
  // Also send the schema through the vendor's JSON response mode.
  bool json_response_format = true;
};

// OpenAI-compatible chat completions over HTTP(S).
class HttpChatBackend : public Backend {
 public:
  explicit HttpChatBackend(LiveBackendConfig config);

  std::string name() const override { return "live:" + config_.model; }
  BackendReply Generate(const BackendCall& call) override;

 private:
  LiveBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

// Wraps another backend and keeps every reply so the run can be replayed.
class RecordingBackend : public Backend {
 public:
  explicit RecordingBackend(std::shared_ptr<Backend> inner);

  std::string name() const override { return inner_->name(); }
  bool deterministic_timing() const override {
    return inner_->deterministic_timing();
  }
  BackendReply Generate(const BackendCall& call) override;

  // Writes the transcript sorted by fingerprint. Records already present in
  // `path` are kept unless re-recorded.
  void WriteTranscript(const std::filesystem::path& path) const;

 private:
  std::shared_ptr<Backend> inner_;
  mutable std::mutex mu_;
  std::map<std::string, std::vector<std::string>> records_;
};

// Token bucket; requests_per_minute <= 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void Acquire();

 private:
  double rate_per_ms_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

struct RetryPolicy {
  int transport_retries = 3;
  int repair_retries = 2;
  int backoff_base_ms = 500;
  int backoff_max_ms = 8000;
};

// Thread-safe front door to a backend: rate limiting, transport retries with
// jittered exponential backoff, schema validation with bounded repair
// re-prompts, and usage accounting.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, RetryPolicy policy = {},
          double requests_per_minute = 0, std::uint64_t seed = 0);

  // Throws GatewayError (kBackendUnavailable, kRateLimited, kTranscriptMiss)
  // or SchemaViolation; each carries the usage measured before failing.
  CompletionResult Complete(const PromptRequest& request);

  UsageStats TotalUsage() const;
  std::string backend_name() const { return backend_->name(); }
  const RetryPolicy& policy() const { return policy_; }

 private:
  BackendReply CallWithRetries(const BackendCall& call, UsageStats& usage);
  std::chrono::milliseconds BackoffDelay(int retry);
  void Account(const UsageStats& usage);

  std::shared_ptr<Backend> backend_;
  RetryPolicy policy_;
  RateLimiter limiter_;
  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  UsageStats total_;
  std::set<std::string> seen_ids_;
};

}  // namespace instrx

#endif  // INSTRX_LLM_GATEWAY_H_
