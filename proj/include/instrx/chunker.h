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

#ifndef INSTRX_CHUNKER_H_
#define INSTRX_CHUNKER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "instrx/doc_model.h"

namespace instrx {

struct ChunkerConfig {
  std::int64_t chunk_budget = 1000;  // tokens
  std::int64_t overlap = 0;          // tokens, sentence granular

  // Throws Error(kConfigError) unless budget > 0 and 0 <= overlap < budget.
  void Validate() const;
};

struct BlockRef {
  int page_number = 0;
  std::size_t block_index = 0;

  bool operator==(const BlockRef&) const = default;
};

struct TextChunk {
  std::size_t chunk_index = 0;
  std::string text;
  std::int64_t token_count = 0;
  std::vector<BlockRef> provenance;
  // Set when the chunk is a single sentence longer than the budget.
  bool oversized = false;
  // Byte offset of `text` in the chunked source.
  std::size_t source_offset = 0;
  // Length in bytes of the prefix repeated from the previous chunk.
  std::size_t overlap_length = 0;
};

nlohmann::json ChunkSummaryToJson(const TextChunk& chunk);

// Token rule: a maximal run of alphanumeric code points is one token; every
// other non-whitespace code point is a token by itself.
std::int64_t CountTokens(std::string_view text);

// Sentence boundaries as half-open byte ranges covering `text` exactly.
// A sentence ends after '\n', or after '.', '!', '?' followed by a
// whitespace run (without newline) and an uppercase letter or digit; in the
// latter case the whitespace stays with the earlier sentence.
std::vector<std::pair<std::size_t, std::size_t>> SplitSentences(
    std::string_view text);

// Packs whole sentences into chunks of at most `chunk_budget` tokens. A
// sentence that alone exceeds the budget becomes its own chunk, flagged
// oversized. `provenance` maps byte ranges of `text` to source blocks.
std::vector<TextChunk> ChunkText(std::string_view text,
                                 std::span<const ProvenanceEntry> provenance,
                                 const ChunkerConfig& config);

}  // namespace instrx

#endif  // INSTRX_CHUNKER_H_
