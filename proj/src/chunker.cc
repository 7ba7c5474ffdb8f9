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

#include <algorithm>

#include "instrx/error.h"
#include "instrx/text_util.h"

namespace instrx {
namespace {

// Decodes one code point at `pos`, advancing it.
char32_t NextCodePoint(std::string_view s, std::size_t& pos) {
  const std::size_t len = text::Utf8SequenceLength(s, pos);
  const std::u32string cps = text::DecodeUtf8(s.substr(pos, len));
  pos += len;
  return cps.front();
}

std::vector<BlockRef> ProvenanceFor(std::span<const ProvenanceEntry> provenance,
                                    std::size_t begin, std::size_t end) {
  std::vector<BlockRef> refs;
  for (const ProvenanceEntry& e : provenance) {
    if (e.end <= begin || e.begin >= end) continue;
    const BlockRef ref{e.page_number, e.block_index};
    if (refs.empty() || !(refs.back() == ref)) refs.push_back(ref);
  }
  return refs;
}

}  // namespace

void ChunkerConfig::Validate() const {
  if (chunk_budget <= 0) {
    throw Error(ErrorKind::kConfigError, "chunk_budget must be positive");
  }
  if (overlap < 0 || overlap >= chunk_budget) {
    throw Error(ErrorKind::kConfigError,
                "overlap must satisfy 0 <= overlap < chunk_budget");
  }
}

nlohmann::json ChunkSummaryToJson(const TextChunk& chunk) {
  nlohmann::json prov = nlohmann::json::array();
  for (const BlockRef& ref : chunk.provenance) {
    prov.push_back({ref.page_number, ref.block_index});
  }
  return {{"chunk_index", chunk.chunk_index},
          {"token_count", chunk.token_count},
          {"oversized", chunk.oversized},
          {"source_offset", chunk.source_offset},
          {"overlap_length", chunk.overlap_length},
          {"provenance", std::move(prov)}};
}

std::int64_t CountTokens(std::string_view s) {
  std::int64_t count = 0;
  bool in_word = false;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const char32_t cp = NextCodePoint(s, pos);
    if (text::IsAlnum(cp)) {
      if (!in_word) ++count;
      in_word = true;
      continue;
    }
    in_word = false;
    if (!text::IsSpace(cp)) ++count;
  }
  return count;
}

std::vector<std::pair<std::size_t, std::size_t>> SplitSentences(
    std::string_view s) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const char32_t cp = NextCodePoint(s, pos);
    if (cp == U'\n') {
      out.emplace_back(start, pos);
      start = pos;
      continue;
    }
    if (cp != U'.' && cp != U'!' && cp != U'?') continue;
    std::size_t look = pos;
    bool saw_space = false;
    bool saw_newline = false;
    char32_t next = 0;
    std::size_t next_start = look;
    while (look < s.size()) {
      next_start = look;
      next = NextCodePoint(s, look);
      if (!text::IsSpace(next)) break;
      saw_space = true;
      saw_newline = saw_newline || next == U'\n';
      next = 0;
    }
    if (!saw_space || saw_newline || next == 0) continue;
    if (text::IsUpper(next) || (next >= U'0' && next <= U'9')) {
      out.emplace_back(start, next_start);
      start = next_start;
      pos = next_start;
    }
  }
  if (start < s.size()) out.emplace_back(start, s.size());
  return out;
}

std::vector<TextChunk> ChunkText(std::string_view text,
                                 std::span<const ProvenanceEntry> provenance,
                                 const ChunkerConfig& config) {
  config.Validate();
  const auto sentences = SplitSentences(text);
  std::vector<std::int64_t> tokens;
  tokens.reserve(sentences.size());
  for (const auto& [b, e] : sentences) {
    tokens.push_back(CountTokens(text.substr(b, e - b)));
  }

  std::vector<TextChunk> chunks;
  auto emit = [&](std::size_t first, std::size_t last, std::size_t fresh,
                  std::int64_t count) {
    TextChunk chunk;
    chunk.chunk_index = chunks.size();
    chunk.source_offset = sentences[first].first;
    const std::size_t end = sentences[last].second;
    chunk.text = std::string(text.substr(chunk.source_offset, end - chunk.source_offset));
    chunk.token_count = count;
    chunk.oversized = count > config.chunk_budget;
    chunk.overlap_length = sentences[fresh].first - chunk.source_offset;
    chunk.provenance = ProvenanceFor(provenance, chunk.source_offset, end);
    chunks.push_back(std::move(chunk));
  };

  // Current chunk covers sentences [first, next); sentences before `fresh`
  // are carried over from the previous chunk.
  std::size_t first = 0;
  std::size_t fresh = 0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (i > fresh && count + tokens[i] > config.chunk_budget) {
      emit(first, i - 1, fresh, count);
      // Carry trailing sentences of the emitted chunk as overlap, but never
      // so much that sentence i no longer fits beside them.
      first = i;
      count = 0;
      std::int64_t carried = 0;
      while (config.overlap > 0 && first > fresh &&
             carried + tokens[first - 1] <= config.overlap &&
             carried + tokens[first - 1] + tokens[i] <= config.chunk_budget) {
        carried += tokens[--first];
      }
      count = carried;
      fresh = i;
    }
    count += tokens[i];
  }
  if (!sentences.empty() && fresh < sentences.size()) {
    emit(first, sentences.size() - 1, fresh, count);
  }
  return chunks;
}

}  // namespace instrx
