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

#include "instrx/doc_model.h"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "instrx/error.h"
#include "instrx/json_locator.h"

namespace instrx {
namespace {

using nlohmann::json;

struct KindName {
  BlockKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {BlockKind::kHeading, "heading"}, {BlockKind::kParagraph, "paragraph"},
    {BlockKind::kCaption, "caption"}, {BlockKind::kTable, "table"},
    {BlockKind::kList, "list"},       {BlockKind::kOther, "other"},
};

class DocumentParser {
 public:
  DocumentParser(std::string_view text, std::string_view source_hint)
      : text_(text), source_hint_(source_hint) {}

  ParsedDocument Parse() {
    json root;
    try {
      root = json::parse(text_);
    } catch (const json::parse_error& e) {
      const auto pos = JsonLocator::PositionOf(text_, e.byte > 0 ? e.byte - 1 : 0);
      throw Error(ErrorKind::kMalformedInput,
                  "invalid JSON at line " + std::to_string(pos.line) +
                      ", column " + std::to_string(pos.column) + ": " +
                      e.what());
    }
    locator_.emplace(text_);
    if (!root.is_object()) Fail("", "document must be a JSON object");

    ParsedDocument doc;
    doc.doc_id = RequireString(root, "", "doc_id");
    if (doc.doc_id.empty()) Fail("/doc_id", "doc_id must be non-empty");
    if (root.contains("source_path")) {
      doc.source_path = RequireString(root, "", "source_path");
    } else {
      doc.source_path = std::string(source_hint_);
    }
    if (root.contains("metadata")) {
      const json& meta = root["metadata"];
      if (!meta.is_object()) Fail("/metadata", "metadata must be an object");
      for (const auto& [key, value] : meta.items()) {
        doc.metadata[key] =
            value.is_string() ? value.get<std::string>() : value.dump();
      }
    }

    const json& pages = Require(root, "", "pages");
    if (!pages.is_array()) Fail("/pages", "pages must be an array");
    if (pages.empty()) Fail("/pages", "document has no pages");
    std::unordered_set<int> seen;
    for (std::size_t i = 0; i < pages.size(); ++i) {
      const std::string ptr = "/pages/" + std::to_string(i);
      Page page = ParsePage(pages[i], ptr);
      if (!seen.insert(page.page_number).second) {
        Fail(ptr + "/page_number",
             "duplicate page_number " + std::to_string(page.page_number));
      }
      if (!doc.pages.empty() && page.page_number < doc.pages.back().page_number) {
        Fail(ptr + "/page_number",
             "page_number " + std::to_string(page.page_number) +
                 " is out of ascending order");
      }
      doc.pages.push_back(std::move(page));
    }
    return doc;
  }

 private:
  [[noreturn]] void Fail(const std::string& pointer, const std::string& what) {
    std::string where = pointer.empty() ? "/" : pointer;
    if (locator_) where += " (" + locator_->Describe(pointer) + ")";
    throw Error(ErrorKind::kMalformedInput, where + ": " + what);
  }

  const json& Require(const json& obj, const std::string& ptr,
                      const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) Fail(ptr, std::string("missing required key \"") + key + "\"");
    return *it;
  }

  std::string RequireString(const json& obj, const std::string& ptr,
                            const char* key) {
    const json& v = Require(obj, ptr, key);
    if (!v.is_string()) Fail(ptr + "/" + key, std::string(key) + " must be a string");
    return v.get<std::string>();
  }

  Page ParsePage(const json& node, const std::string& ptr) {
    if (!node.is_object()) Fail(ptr, "page must be an object");
    Page page;
    const json& number = Require(node, ptr, "page_number");
    if (!number.is_number_integer() || number.get<long long>() < 1) {
      Fail(ptr + "/page_number", "page_number must be a positive integer");
    }
    page.page_number = number.get<int>();
    const json& blocks = Require(node, ptr, "blocks");
    if (!blocks.is_array()) Fail(ptr + "/blocks", "blocks must be an array");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      page.blocks.push_back(
          ParseBlock(blocks[i], ptr + "/blocks/" + std::to_string(i)));
    }
    return page;
  }

  Block ParseBlock(const json& node, const std::string& ptr) {
    if (!node.is_object()) Fail(ptr, "block must be an object");
    Block block;
    const std::string kind = RequireString(node, ptr, "kind");
    const auto parsed = ParseBlockKind(kind);
    if (!parsed) Fail(ptr + "/kind", "unknown block kind \"" + kind + "\"");
    block.kind = *parsed;
    block.text = RequireString(node, ptr, "text");

    const auto level = node.find("level");
    const bool has_level = level != node.end() && !level->is_null();
    if (block.kind == BlockKind::kHeading) {
      if (!has_level) Fail(ptr, "heading block is missing \"level\"");
      if (!level->is_number_integer() || level->get<long long>() < 1) {
        Fail(ptr + "/level", "level must be a positive integer");
      }
      block.level = level->get<int>();
    } else if (has_level) {
      Fail(ptr + "/level", "level is only allowed on heading blocks");
    }
    if (block.text.empty() && block.kind != BlockKind::kTable &&
        block.kind != BlockKind::kOther) {
      Fail(ptr + "/text", std::string("empty text on a ") +
                              BlockKindName(block.kind) + " block");
    }
    return block;
  }

  std::string_view text_;
  std::string_view source_hint_;
  std::optional<JsonLocator> locator_;
};

}  // namespace

const char* BlockKindName(BlockKind kind) {
  for (const auto& entry : kKindNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "other";
}

std::optional<BlockKind> ParseBlockKind(std::string_view name) {
  for (const auto& entry : kKindNames) {
    if (name == entry.name) return entry.kind;
  }
  return std::nullopt;
}

ParsedDocument ParseDocument(std::string_view json_text,
                             std::string_view source_hint) {
  return DocumentParser(json_text, source_hint).Parse();
}

ParsedDocument LoadDocument(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIoFailure, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw Error(ErrorKind::kIoFailure, "read failed for " + path.string());
  }
  try {
    return ParseDocument(buffer.str(), path.string());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

nlohmann::json DocumentToJson(const ParsedDocument& doc) {
  json pages = json::array();
  for (const Page& page : doc.pages) {
    json blocks = json::array();
    for (const Block& block : page.blocks) {
      json b = {{"kind", BlockKindName(block.kind)}, {"text", block.text}};
      if (block.level) b["level"] = *block.level;
      blocks.push_back(std::move(b));
    }
    pages.push_back({{"page_number", page.page_number}, {"blocks", blocks}});
  }
  return {{"doc_id", doc.doc_id},
          {"source_path", doc.source_path},
          {"metadata", doc.metadata},
          {"pages", std::move(pages)}};
}

FlattenedText FlattenText(const ParsedDocument& doc,
                          std::optional<PageRange> span) {
  if (span) {
    if (span->first > span->last || span->first < doc.first_page() ||
        span->last > doc.last_page()) {
      throw Error(ErrorKind::kSpanOutOfRange,
                  "page span " + std::to_string(span->first) + ".." +
                      std::to_string(span->last) + " outside document " +
                      doc.doc_id + " (pages " +
                      std::to_string(doc.first_page()) + ".." +
                      std::to_string(doc.last_page()) + ")");
    }
  }
  FlattenedText out;
  for (const Page& page : doc.pages) {
    if (span && (page.page_number < span->first || page.page_number > span->last)) {
      continue;
    }
    for (std::size_t i = 0; i < page.blocks.size(); ++i) {
      const std::string& text = page.blocks[i].text;
      if (text.empty()) continue;
      if (!out.text.empty() || !out.provenance.empty()) out.text.push_back('\n');
      const std::size_t begin = out.text.size();
      out.text += text;
      out.provenance.push_back({begin, out.text.size(), page.page_number, i});
    }
  }
  return out;
}

}  // namespace instrx
