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

#ifndef INSTRX_ERROR_H_
#define INSTRX_ERROR_H_

#include <stdexcept>
#include <string>

#include "instrx/usage.h"

namespace instrx {

enum class ErrorKind {
  kMalformedInput,
  kIoFailure,
  kSpanOutOfRange,
  kBackendUnavailable,
  kRateLimited,
  kSchemaViolation,
  kTranscriptMiss,
  kConfigError,
  kMismatchedCorpora,
};

const char* ErrorKindName(ErrorKind kind);

// Base for every error the pipeline raises. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by the LLM gateway. Carries whatever usage was measured before the
// failure so that corpus totals still include failed attempts.
class GatewayError : public Error {
 public:
  GatewayError(ErrorKind kind, const std::string& message, UsageStats usage)
      : Error(kind, message), usage_(std::move(usage)) {}

  const UsageStats& usage() const { return usage_; }

 private:
  UsageStats usage_;
};

// Schema violation after the repair loop is exhausted. Keeps the last raw
// model output so callers can log or persist it.
class SchemaViolation : public GatewayError {
 public:
  SchemaViolation(const std::string& message, std::string last_raw_text,
                  UsageStats usage, int attempts)
      : GatewayError(ErrorKind::kSchemaViolation, message, std::move(usage)),
        last_raw_text_(std::move(last_raw_text)),
        attempts_(attempts) {}

  int attempts() const { return attempts_; }

  const std::string& last_raw_text() const { return last_raw_text_; }

 private:
  std::string last_raw_text_;
  int attempts_;
};

}  // namespace instrx

#endif  // INSTRX_ERROR_H_
