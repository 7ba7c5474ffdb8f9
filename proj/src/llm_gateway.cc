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

#include "instrx/llm_gateway.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "instrx/chunker.h"
#include "instrx/json_schema.h"

namespace instrx {
namespace {

using nlohmann::json;


std::string FormatTemperature(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", t);
  return buf;
}

std::int64_t ElapsedMs(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - since)
      .count();
}

std::map<std::string, std::vector<std::string>> ReadTranscript(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open transcript " + path.string());
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() ||
        !record.contains("fingerprint") || !record["fingerprint"].is_string() ||
        !record.contains("responses") || !record["responses"].is_array()) {
      throw Error(ErrorKind::kMalformedInput,
                  where + ": expected {\"fingerprint\": str, \"responses\": [str]}");
    }
    std::vector<std::string> responses;
    for (const auto& r : record["responses"]) {
      if (!r.is_string()) {
        throw Error(ErrorKind::kMalformedInput, where + ": responses must be strings");
      }
      responses.push_back(r.get<std::string>());
    }
    const std::string fp = record["fingerprint"].get<std::string>();
    if (!out.emplace(fp, std::move(responses)).second) {
      throw Error(ErrorKind::kMalformedInput, where + ": duplicate fingerprint " + fp);
    }
  }
  return out;
}

}  // namespace

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr);
  static const char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

void PromptRequest::Validate() const {
  if (user_text.empty()) {
    throw Error(ErrorKind::kConfigError, "request " + request_id + " has empty user_text");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorKind::kConfigError,
                "request " + request_id + " temperature outside [0, 2]");
  }
  if (max_output_tokens <= 0) {
    throw Error(ErrorKind::kConfigError,
                "request " + request_id + " max_output_tokens must be positive");
  }
}

std::string Fingerprint(const PromptRequest& request) {
  const json canonical = json::array(
      {"instrx-fp-v1", request.system_text, request.user_text,
       request.response_schema ? *request.response_schema : json(nullptr),
       FormatTemperature(request.temperature)});
  return Sha256Hex(canonical.dump());
}

std::int64_t SimulatedLatencyMs(std::int64_t input_tokens,
                                std::int64_t output_tokens) {
  return 200 + input_tokens / 10 + output_tokens * 15;
}

// ---------------------------------------------------------------------------

TranscriptBackend::TranscriptBackend(
    std::map<std::string, std::vector<std::string>> responses)
    : responses_(std::move(responses)) {}

std::shared_ptr<TranscriptBackend> TranscriptBackend::FromFile(
    const std::filesystem::path& path) {
  return std::make_shared<TranscriptBackend>(ReadTranscript(path));
}

BackendReply TranscriptBackend::Generate(const BackendCall& call) {
  auto it = responses_.find(call.fingerprint);
  if (it == responses_.end() ||
      static_cast<std::size_t>(call.attempt) > it->second.size()) {
    throw GatewayError(ErrorKind::kTranscriptMiss,
                       "no recorded response for request " +
                           call.request.request_id + " (fingerprint " +
                           call.fingerprint + ", attempt " +
                           std::to_string(call.attempt) + ")",
                       UsageStats{0, 0, 0, name()});
  }
  BackendReply reply;
  reply.text = it->second[call.attempt - 1];
  reply.usage.backend_name = name();
  reply.usage.input_tokens =
      CountTokens(call.request.system_text) + CountTokens(call.user_text);
  reply.usage.output_tokens = CountTokens(reply.text);
  reply.usage.wall_time_ms =
      SimulatedLatencyMs(reply.usage.input_tokens, reply.usage.output_tokens);
  return reply;
}

// ---------------------------------------------------------------------------

HttpChatBackend::HttpChatBackend(LiveBackendConfig config)
    : config_(std::move(config)) {
  const std::string& url = config_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kConfigError, "base_url needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

BackendReply HttpChatBackend::Generate(const BackendCall& call) {
  const auto start = std::chrono::steady_clock::now();
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(std::chrono::milliseconds(config_.connect_timeout_ms));
  client.set_read_timeout(std::chrono::milliseconds(config_.read_timeout_ms));

  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  json messages = json::array();
  if (!call.request.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", call.request.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", call.user_text}});
  json body = {{"model", config_.model},
               {"messages", std::move(messages)},
               {"temperature", call.request.temperature},
               {"max_tokens", call.request.max_output_tokens}};
  if (call.request.response_schema && config_.json_response_format) {
    body["response_format"] = {{"type", "json_object"}};
  }

  auto res = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(),
                         "application/json");
  if (!res) {
    throw TransportError("transport failure: " + httplib::to_string(res.error()),
                         false);
  }
  if (res->status == 429) throw TransportError("HTTP 429 from backend", true);
  if (res->status >= 500) {
    throw TransportError("HTTP " + std::to_string(res->status) + " from backend", false);
  }
  if (res->status != 200) {
    throw GatewayError(ErrorKind::kBackendUnavailable,
                       "HTTP " + std::to_string(res->status) + ": " + res->body,
                       UsageStats{0, 0, ElapsedMs(start), name()});
  }

  json reply_json = json::parse(res->body, nullptr, false);
  const json* content = nullptr;
  if (!reply_json.is_discarded()) {
    const json::json_pointer ptr("/choices/0/message/content");
    if (reply_json.contains(ptr) && reply_json[ptr].is_string()) {
      content = &reply_json[ptr];
    }
  }
  if (content == nullptr) {
    throw TransportError("unexpected completion payload", false);
  }

  BackendReply reply;
  reply.text = content->get<std::string>();
  reply.usage.backend_name = name();
  const json usage = reply_json.value("usage", json::object());
  reply.usage.input_tokens = usage.value(
      "prompt_tokens",
      CountTokens(call.request.system_text) + CountTokens(call.user_text));
  reply.usage.output_tokens = usage.value("completion_tokens", CountTokens(reply.text));
  reply.usage.wall_time_ms = ElapsedMs(start);
  return reply;
}

// ---------------------------------------------------------------------------

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner)
    : inner_(std::move(inner)) {}

BackendReply RecordingBackend::Generate(const BackendCall& call) {
  BackendReply reply = inner_->Generate(call);
  std::lock_guard<std::mutex> lock(mu_);
  auto& slots = records_[call.fingerprint];
  if (slots.size() < static_cast<std::size_t>(call.attempt)) slots.resize(call.attempt);
  slots[call.attempt - 1] = reply.text;
  return reply;
}

void RecordingBackend::WriteTranscript(const std::filesystem::path& path) const {
  std::map<std::string, std::vector<std::string>> merged;
  if (std::filesystem::exists(path)) merged = ReadTranscript(path);
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [fp, responses] : records_) merged[fp] = responses;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoFailure, "cannot write transcript " + path.string());
  for (const auto& [fp, responses] : merged) {
    out << json{{"fingerprint", fp}, {"responses", responses}}.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double requests_per_minute)
    : rate_per_ms_(requests_per_minute / 60000.0),
      capacity_(std::max(1.0, requests_per_minute / 60.0)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::Acquire() {
  if (rate_per_ms_ <= 0) return;
  std::unique_lock<std::mutex> lock(mu_);
  while (true) {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed =
        std::chrono::duration<double, std::milli>(now - last_).count();
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_ms_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait_ms = (1.0 - tokens_) / rate_per_ms_;
    lock.unlock();
    std::this_thread::sleep_for(
        std::chrono::microseconds(static_cast<std::int64_t>(wait_ms * 1000) + 1));
    lock.lock();
  }
}

// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<Backend> backend, RetryPolicy policy,
                 double requests_per_minute, std::uint64_t seed)
    : backend_(std::move(backend)),
      policy_(policy),
      limiter_(requests_per_minute),
      rng_(seed) {
  total_.backend_name = backend_->name();
}

std::chrono::milliseconds Gateway::BackoffDelay(int retry) {
  const double cap = std::min<double>(policy_.backoff_max_ms,
                                      policy_.backoff_base_ms * std::pow(2.0, retry));
  std::lock_guard<std::mutex> lock(mu_);
  std::uniform_real_distribution<double> jitter(0.5, 1.0);
  return std::chrono::milliseconds(static_cast<std::int64_t>(cap * jitter(rng_)));
}

void Gateway::Account(const UsageStats& usage) {
  std::lock_guard<std::mutex> lock(mu_);
  total_ += usage;
}

UsageStats Gateway::TotalUsage() const {
  std::lock_guard<std::mutex> lock(mu_);
  return total_;
}

BackendReply Gateway::CallWithRetries(const BackendCall& call, UsageStats& usage) {
  for (int retry = 0;; ++retry) {
    limiter_.Acquire();
    try {
      return backend_->Generate(call);
    } catch (const TransportError& e) {
      if (retry >= policy_.transport_retries) {
        const ErrorKind kind = e.rate_limited() ? ErrorKind::kRateLimited
                                                : ErrorKind::kBackendUnavailable;
        throw GatewayError(kind,
                           "request " + call.request.request_id + " failed after " +
                               std::to_string(retry + 1) + " tries: " + e.what(),
                           usage);
      }
    } catch (const GatewayError& e) {
      UsageStats total = usage;
      total += e.usage();
      throw GatewayError(e.kind(), e.what(), total);
    }
    std::this_thread::sleep_for(BackoffDelay(retry));
  }
}

CompletionResult Gateway::Complete(const PromptRequest& request) {
  request.Validate();
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (!seen_ids_.insert(request.request_id).second) {
      throw Error(ErrorKind::kConfigError,
                  "duplicate request_id " + request.request_id);
    }
  }

  const auto start = std::chrono::steady_clock::now();
  const bool simulated = backend_->deterministic_timing();
  CompletionResult result;
  result.request_id = request.request_id;
  result.usage.backend_name = backend_->name();
  BackendCall call{request, Fingerprint(request), 1, request.user_text};

  auto finish_usage = [&](UsageStats& usage) {
    if (!simulated) usage.wall_time_ms = ElapsedMs(start);
    Account(usage);
  };

  std::string last_error;
  for (call.attempt = 1;; ++call.attempt) {
    result.attempts = call.attempt;
    BackendReply reply;
    try {
      reply = CallWithRetries(call, result.usage);
    } catch (const GatewayError& e) {
      UsageStats usage = e.usage();
      usage.backend_name = backend_->name();
      finish_usage(usage);
      throw GatewayError(e.kind(), e.what(), usage);
    }
    result.usage += reply.usage;
    result.text = std::move(reply.text);
    if (!request.response_schema) break;

    std::string error;
    if (auto parsed = ParseModelJson(result.text, &error)) {
      if (auto violation = ValidateAgainstSchema(*parsed, *request.response_schema)) {
        error = "schema violation at " + *violation;
      } else {
        result.parsed = std::move(*parsed);
        break;
      }
    }
    last_error = error;
    if (call.attempt > policy_.repair_retries) {
      finish_usage(result.usage);
      throw SchemaViolation("request " + request.request_id + ": " + last_error +
                                " (after " + std::to_string(call.attempt) +
                                " attempts)",
                            result.text, result.usage, call.attempt);
    }
    call.user_text = request.user_text +
                     "\n\nYour previous response could not be used (" + error +
                     "). Reply again with only a JSON value matching this "
                     "schema:\n" +
                     request.response_schema->dump();
  }
  finish_usage(result.usage);
  return result;
}

}  // namespace instrx
