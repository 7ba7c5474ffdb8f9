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

#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "instrx/error.h"
#include "support/test_util.h"

namespace instrx {
namespace {

using nlohmann::json;
using testing::FixtureDir;
using testing::Gen;

json OnePage(int number, json blocks) {
  return {{"page_number", number}, {"blocks", std::move(blocks)}};
}

json Para(const std::string& text) { return {{"kind", "paragraph"}, {"text", text}}; }

std::string ErrorText(const json& doc, ErrorKind* kind = nullptr) {
  try {
    ParseDocument(doc.dump(2));
  } catch (const Error& e) {
    if (kind) *kind = e.kind();
    return e.what();
  }
  return {};
}

// Random but valid document: 1-6 pages, 0-5 blocks each, arbitrary kinds.
ParsedDocument RandomDocument(Gen& gen) {
  static const std::vector<std::string> words = {
      "alpha", "Beta", "gamma.", "délta", "ε", "survey", "\t", "  ", "12", "(x)"};
  ParsedDocument doc;
  doc.doc_id = "rand" + std::to_string(gen.Below(1000));
  int number = 1 + static_cast<int>(gen.Below(3));
  const std::size_t pages = 1 + gen.Below(6);
  for (std::size_t p = 0; p < pages; ++p) {
    Page page;
    page.page_number = number;
    number += 1 + static_cast<int>(gen.Below(2));
    const std::size_t blocks = gen.Below(6);
    for (std::size_t b = 0; b < blocks; ++b) {
      Block block;
      block.kind = static_cast<BlockKind>(gen.Below(6));
      if (block.kind == BlockKind::kHeading) block.level = 1 + static_cast<int>(gen.Below(3));
      const bool may_be_empty =
          block.kind == BlockKind::kTable || block.kind == BlockKind::kOther;
      const std::size_t n = (may_be_empty ? 0 : 1) + gen.Below(5);
      for (std::size_t w = 0; w < n; ++w) {
        if (w) block.text += ' ';
        block.text += gen.Pick(words);
      }
      page.blocks.push_back(std::move(block));
    }
    doc.pages.push_back(std::move(page));
  }
  return doc;
}

TEST_SUITE("doc_model") {

TEST_CASE("loads the ten page fixture") {
  const ParsedDocument doc = LoadDocument(FixtureDir() / "corpus" / "table2_class.json");
  CHECK(doc.doc_id == "table2_class");
  REQUIRE(doc.pages.size() == 10);
  CHECK(doc.pages[0].page_number == 1);
  CHECK(doc.last_page() == 10);
  CHECK(doc.pages[3].blocks[0].kind == BlockKind::kHeading);
  CHECK(doc.pages[3].blocks[0].level == 1);
}

TEST_CASE("duplicate page number is rejected with its pointer") {
  json doc = {{"doc_id", "d"},
              {"pages", {OnePage(1, {Para("a")}), OnePage(3, {Para("b")}),
                         OnePage(3, {Para("c")})}}};
  ErrorKind kind{};
  const std::string msg = ErrorText(doc, &kind);
  CHECK(kind == ErrorKind::kMalformedInput);
  CHECK(msg.find("/pages/2/page_number") != std::string::npos);
  CHECK(msg.find("duplicate page_number 3") != std::string::npos);
}

TEST_CASE("heading without level names the block") {
  json doc = {{"doc_id", "d"},
              {"pages", {OnePage(1, {Para("a"), {{"kind", "heading"}, {"text", "Method"}}})}}};
  ErrorKind kind{};
  const std::string msg = ErrorText(doc, &kind);
  CHECK(kind == ErrorKind::kMalformedInput);
  CHECK(msg.find("/pages/0/blocks/1") != std::string::npos);
  CHECK(msg.find("level") != std::string::npos);
}

TEST_CASE("other structural violations") {
  ErrorKind kind{};
  CHECK(ErrorText(json{{"doc_id", "d"},
                       {"pages", {OnePage(1, {{{"kind", "paragraph"}, {"text", "x"}, {"level", 2}}})}}},
                  &kind)
            .find("/pages/0/blocks/0/level") != std::string::npos);
  CHECK(ErrorText(json{{"doc_id", "d"}, {"pages", {OnePage(1, {Para("")})}}})
            .find("/pages/0/blocks/0/text") != std::string::npos);
  CHECK(ErrorText(json{{"doc_id", "d"}, {"pages", json::array()}}).find("no pages") !=
        std::string::npos);
  CHECK(ErrorText(json{{"doc_id", "d"}, {"pages", {OnePage(2, {Para("a")}), OnePage(1, {Para("b")})}}})
            .find("ascending") != std::string::npos);
  CHECK(ErrorText(json{{"pages", {OnePage(1, {Para("a")})}}}).find("doc_id") != std::string::npos);
  CHECK(ErrorText(json{{"doc_id", "d"}, {"pages", {OnePage(1, {{{"kind", "figure"}, {"text", "x"}}})}}})
            .find("figure") != std::string::npos);
  // Empty text is allowed on table and other blocks.
  CHECK(ErrorText(json{{"doc_id", "d"},
                       {"pages", {OnePage(1, {{{"kind", "table"}, {"text", ""}}})}}})
            .empty());
}

TEST_CASE("syntax errors carry a line number") {
  ErrorKind kind{};
  try {
    ParseDocument("{\n  \"doc_id\": \"d\",\n  \"pages\": [,]\n}");
    FAIL("expected an error");
  } catch (const Error& e) {
    kind = e.kind();
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK(kind == ErrorKind::kMalformedInput);
}

TEST_CASE("missing file is an io failure") {
  try {
    LoadDocument(FixtureDir() / "corpus" / "does_not_exist.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIoFailure);
  }
}

TEST_CASE("flatten joins two blocks with a newline") {
  ParsedDocument doc = ParseDocument(
      json{{"doc_id", "d"}, {"pages", {OnePage(1, {Para("A"), Para("B")})}}}.dump());
  const FlattenedText flat = FlattenText(doc);
  CHECK(flat.text == "A\nB");
  REQUIRE(flat.provenance.size() == 2);
  CHECK(flat.provenance[0] == ProvenanceEntry{0, 1, 1, 0});
  CHECK(flat.provenance[1] == ProvenanceEntry{2, 3, 1, 1});
}

TEST_CASE("flatten restricted to one page") {
  ParsedDocument doc = ParseDocument(
      json{{"doc_id", "d"},
           {"pages", {OnePage(1, {Para("one")}), OnePage(2, {Para("two"), Para("deux")}),
                      OnePage(3, {Para("three")})}}}
          .dump());
  const FlattenedText flat = FlattenText(doc, PageRange{2, 2});
  CHECK(flat.text == "two\ndeux");
  for (const auto& p : flat.provenance) CHECK(p.page_number == 2);
  CHECK_THROWS_AS(FlattenText(doc, PageRange{3, 4}), Error);
  CHECK_THROWS_AS(FlattenText(doc, PageRange{3, 2}), Error);
  try {
    FlattenText(doc, PageRange{0, 1});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSpanOutOfRange);
  }
}

TEST_CASE("flattened length of the fixture matches block arithmetic") {
  // Oracle computed straight from the raw JSON, not from ParsedDocument.
  const json raw = json::parse(testing::ReadFile(FixtureDir() / "corpus" / "table2_class.json"));
  std::size_t chars = 0;
  std::size_t blocks = 0;
  for (const auto& page : raw["pages"]) {
    for (const auto& block : page["blocks"]) {
      const auto text = block["text"].get<std::string>();
      if (text.empty()) continue;
      chars += text.size();
      ++blocks;
    }
  }
  const FlattenedText flat = FlattenText(LoadDocument(FixtureDir() / "corpus" / "table2_class.json"));
  CHECK(flat.text.size() == chars + (blocks - 1));
  CHECK(flat.provenance.size() == blocks);
}

TEST_CASE("round trip, determinism and provenance totality on random documents") {
  Gen gen(20260101);
  for (int iter = 0; iter < 300; ++iter) {
    const ParsedDocument doc = RandomDocument(gen);
    const ParsedDocument again = ParseDocument(DocumentToJson(doc).dump());
    CHECK(again == doc);

    const FlattenedText a = FlattenText(doc);
    const FlattenedText b = FlattenText(again);
    CHECK(a.text == b.text);
    CHECK(a.provenance == b.provenance);

    // Each byte is covered by at most one entry; uncovered bytes are the
    // newline separators between consecutive entries.
    std::vector<int> cover(a.text.size(), 0);
    std::string rebuilt;
    for (std::size_t i = 0; i < a.provenance.size(); ++i) {
      const auto& p = a.provenance[i];
      for (std::size_t k = p.begin; k < p.end; ++k) ++cover[k];
      const Page* page = nullptr;
      for (const Page& pg : doc.pages) {
        if (pg.page_number == p.page_number) page = &pg;
      }
      REQUIRE(page != nullptr);
      CHECK(a.text.substr(p.begin, p.end - p.begin) == page->blocks[p.block_index].text);
      if (i) rebuilt += '\n';
      rebuilt += a.text.substr(p.begin, p.end - p.begin);
    }
    CHECK(rebuilt == a.text);
    for (std::size_t k = 0; k < cover.size(); ++k) {
      if (cover[k] == 0) {
        CHECK(a.text[k] == '\n');
      } else {
        CHECK(cover[k] == 1);
      }
    }
  }
}

}  // TEST_SUITE

}  // namespace
}  // namespace instrx
