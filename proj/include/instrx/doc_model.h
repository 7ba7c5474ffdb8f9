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

#ifndef INSTRX_DOC_MODEL_H_
#define INSTRX_DOC_MODEL_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace instrx {

enum class BlockKind { kHeading, kParagraph, kCaption, kTable, kList, kOther };

const char* BlockKindName(BlockKind kind);
std::optional<BlockKind> ParseBlockKind(std::string_view name);

struct Block {
  BlockKind kind = BlockKind::kParagraph;
  std::optional<int> level;  // present iff kind == kHeading
  std::string text;

  bool operator==(const Block&) const = default;
};

struct Page {
  int page_number = 1;
  std::vector<Block> blocks;  // reading order

  bool operator==(const Page&) const = default;
};

// One paper as emitted by an upstream PDF parser, in the ingestion schema:
//
//   {"doc_id": str, "source_path": str, "metadata": {...},
//    "pages": [{"page_number": int,
//               "blocks": [{"kind": str, "level": int?, "text": str}]}]}
//
// Immutable after loading; pages are strictly ascending by page_number.
struct ParsedDocument {
  std::string doc_id;
  std::string source_path;
  std::map<std::string, std::string> metadata;
  std::vector<Page> pages;

  int first_page() const { return pages.front().page_number; }
  int last_page() const { return pages.back().page_number; }

  bool operator==(const ParsedDocument&) const = default;
};

// Parses and validates a document. `source_hint` fills source_path when the
// file omits it. Throws Error(kMalformedInput) naming the JSON pointer and
// source line of the offending node.
ParsedDocument ParseDocument(std::string_view json_text,
                             std::string_view source_hint = {});

// Throws Error(kIoFailure) when the file cannot be read.
ParsedDocument LoadDocument(const std::filesystem::path& path);

nlohmann::json DocumentToJson(const ParsedDocument& doc);

struct PageRange {
  int first = 1;
  int last = 1;
};

// Maps [begin, end) byte offsets of flattened text back to a source block.
// block_index is the block's position within its page.
struct ProvenanceEntry {
  std::size_t begin = 0;
  std::size_t end = 0;
  int page_number = 0;
  std::size_t block_index = 0;

  bool operator==(const ProvenanceEntry&) const = default;
};

struct FlattenedText {
  std::string text;
  std::vector<ProvenanceEntry> provenance;
};

// Joins non-empty block texts in reading order with '\n'. Blocks with empty
// text (tables without content, figures) are skipped. Throws
// Error(kSpanOutOfRange) if `span` is inverted or leaves the document.
FlattenedText FlattenText(const ParsedDocument& doc,
                          std::optional<PageRange> span = std::nullopt);

}  // namespace instrx

#endif  // INSTRX_DOC_MODEL_H_
