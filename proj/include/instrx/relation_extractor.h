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

#ifndef INSTRX_RELATION_EXTRACTOR_H_
#define INSTRX_RELATION_EXTRACTOR_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "instrx/chunker.h"
#include "instrx/extraction_chain.h"
#include "instrx/instrument_type.h"
#include "instrx/llm_gateway.h"
#include "instrx/normalizer.h"
#include "instrx/usage.h"

namespace instrx {

// Primary output: what one instrument is, who answers it, what it measures.
struct InstrumentRecord {
  std::string doc_id;
  std::string canonical_name;
  InstrumentType instrument_type = InstrumentType::kOtherTool;
  std::vector<std::string> respondents;
  std::vector<std::string> constructs;
  std::vector<std::string> outcomes;
  // Field name -> verbatim source quotes.
  std::map<std::string, std::vector<std::string>> evidence;

  bool operator==(const InstrumentRecord&) const = default;
};

// Record file for one document:
//   {"doc_id": str, "instruments": [{"name": str, "type": str,
//     "respondents": [str], "constructs": [str], "outcomes": [str],
//     "evidence": {field: [str]}}]}
nlohmann::json RecordsToJson(std::string_view doc_id,
                             const std::vector<InstrumentRecord>& records);

// Throws Error(kMalformedInput) when the payload does not follow the record
// file format.
std::vector<InstrumentRecord> RecordsFromJson(const nlohmann::json& j);

// Response schema for the relation prompt.
const nlohmann::json& RelationSchema();

// Case-insensitive, order-preserving dedup of trimmed, non-empty strings.
std::vector<std::string> DedupStrings(const std::vector<std::string>& items);

// Chunks whose text contains any name of the anchor, compared as whole
// words after key normalization. Falls back to every chunk.
std::vector<std::size_t> SelectChunksForAnchor(const CanonicalInstrument& anchor,
                                               const std::vector<TextChunk>& chunks);

struct RelationCall {
  std::string canonical_name;
  std::string request_id;
  std::string fingerprint;
  int attempts = 0;
  UsageStats usage;
  std::vector<std::size_t> chunk_indices;
  bool degraded = false;       // schema failure: record holds empty lists
  bool type_coerced = false;   // unknown type label mapped to other_tool
};

struct RelationOutcome {
  std::vector<InstrumentRecord> records;  // one per anchor, anchor order
  std::vector<RelationCall> calls;
  std::vector<std::string> warnings;
  UsageStats usage;

  std::vector<nlohmann::json> ToJsonLines() const;
};

struct RelationOptions {
  std::size_t max_concurrency = 4;
  std::int64_t max_output_tokens = 2048;
};

class RelationExtractor {
 public:
  // `dict` may be null; when present it supplies default types for degraded
  // records.
  RelationExtractor(Gateway& gateway, const PromptTemplates& templates,
                    const InstrumentDictionary* dict, RelationOptions options = {});

  // One structured request per anchor. Fatal gateway errors propagate.
  RelationOutcome Extract(std::string_view doc_id,
                          const std::vector<CanonicalInstrument>& anchors,
                          const std::vector<TextChunk>& chunks) const;

 private:
  Gateway& gateway_;
  const PromptTemplates& templates_;
  const InstrumentDictionary* dict_;
  RelationOptions options_;
};

}  // namespace instrx

#endif  // INSTRX_RELATION_EXTRACTOR_H_
