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

#include "instrx/error.h"

namespace instrx {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedInput:
      return "MalformedInput";
    case ErrorKind::kIoFailure:
      return "IoFailure";
    case ErrorKind::kSpanOutOfRange:
      return "SpanOutOfRange";
    case ErrorKind::kBackendUnavailable:
      return "BackendUnavailable";
    case ErrorKind::kRateLimited:
      return "RateLimited";
    case ErrorKind::kSchemaViolation:
      return "SchemaViolation";
    case ErrorKind::kTranscriptMiss:
      return "TranscriptMiss";
    case ErrorKind::kConfigError:
      return "ConfigError";
    case ErrorKind::kMismatchedCorpora:
      return "MismatchedCorpora";
  }
  return "Unknown";
}

}  // namespace instrx
