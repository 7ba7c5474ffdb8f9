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


#include "instrx/section_detector.h"

#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "support/test_util.h"

namespace instrx {
namespace {

using testing::FixtureDir;
using testing::Gen;

Block Heading(const std::string& text, int level = 1) {
  return {BlockKind::kHeading, level, text};
}
Block Para(const std::string& text) { return {BlockKind::kParagraph, std::nullopt, text}; }

ParsedDocument Pages(int n) {
  ParsedDocument doc;
  doc.doc_id = "synthetic";
  for (int i = 1; i <= n; ++i) doc.pages.push_back({i, {Para("Body text of page " + std::to_string(i) + ".")}});
  return doc;
}

TEST_SUITE("section_detector") {

TEST_CASE("numbered method heading followed by results") {
  const ParsedDocument doc = LoadDocument(FixtureDir() / "corpus" / "table2_class.json");
  const SectionSpan span = DetectMethodSpan(doc);
  CHECK(span.mode == DetectionMode::kHeadingMatch);
  CHECK(span.start_page == 4);
  CHECK(span.end_page == 8);
  CHECK(span.matched_heading == "3. Method");
}

TEST_CASE("no methods heading falls back to the full text") {
  const ParsedDocument doc = LoadDocument(FixtureDir() / "corpus" / "teacher_stress.json");
  const SectionSpan span = DetectMethodSpan(doc);
  CHECK(span.mode == DetectionMode::kFallbackFullText);
  CHECK(span.start_page == doc.first_page());
  CHECK(span.end_page == doc.last_page());
  CHECK_FALSE(span.matched_heading.has_value());
}

TEST_CASE("methodology and findings") {
  const ParsedDocument doc = LoadDocument(FixtureDir() / "corpus" / "wj_reading.json");
  const SectionSpan span = DetectMethodSpan(doc);
  CHECK(span.mode == DetectionMode::kHeadingMatch);
  CHECK(span.start_page == 2);
  CHECK(span.end_page == 5);
}

TEST_CASE("results before methods falls back") {
  const ParsedDocument doc = LoadDocument(FixtureDir() / "corpus" / "results_first.json");
  CHECK(DetectMethodSpan(doc).mode == DetectionMode::kFallbackFullText);
}

TEST_CASE("shared page and missing results heading") {
  ParsedDocument doc = Pages(5);
  doc.pages[2].blocks.push_back(Heading("Methods"));
  doc.pages[2].blocks.push_back(Heading("Results"));
  SectionSpan span = DetectMethodSpan(doc);
  CHECK(span.mode == DetectionMode::kHeadingMatch);
  CHECK(span.start_page == 3);
  CHECK(span.end_page == 3);

  doc = Pages(5);
  doc.pages[1].blocks.push_back(Heading("Methods"));
  CHECK(DetectMethodSpan(doc).mode == DetectionMode::kFallbackFullText);
}

TEST_CASE("heading normalization") {
  CHECK(StripHeadingNumbering("3. Method") == "Method");
  CHECK(StripHeadingNumbering("II. METHODS") == "METHODS");
  CHECK(StripHeadingNumbering("2.1 Participants") == "Participants");
  CHECK(StripHeadingNumbering("(b) Results") == "Results");
  CHECK(HeadingWords("4.  Results & Discussion") == "results discussion");
  CHECK(HeadingMatches("Materials and Methods", {"materials and methods"}));
  CHECK(HeadingMatches("Research Design:", {"research design"}));
  CHECK_FALSE(HeadingMatches("Methodological Notes", {"method", "methodology"}));
  CHECK_FALSE(HeadingMatches("Introduction", {"method"}));
}

TEST_CASE("planted headings are recovered on random layouts") {
  Gen gen(404);
  const std::vector<std::string> methods = {"Method", "3. Methods", "II. METHODOLOGY",
                                            "Materials and Methods", "Research Design"};
  const std::vector<std::string> results = {"Results", "4. Findings", "III. RESULTS",
                                            "Analysis and Results", "Discussion"};
  const std::vector<std::string> other = {"Introduction", "Background", "Participants",
                                          "Measures", "Limitations", "References"};
  for (int iter = 0; iter < 400; ++iter) {
    const int n = 1 + static_cast<int>(gen.Below(15));
    ParsedDocument doc = Pages(n);
    for (auto& page : doc.pages) {
      if (gen.Chance(0.3)) page.blocks.insert(page.blocks.begin(), Heading(gen.Pick(other), 2));
    }
    const bool plant = gen.Chance(0.7);
    int m = 0, r = 0;
    if (plant) {
      m = 1 + static_cast<int>(gen.Below(n));
      r = m + static_cast<int>(gen.Below(n - m + 1));
      doc.pages[m - 1].blocks.push_back(Heading(gen.Pick(methods)));
      doc.pages[r - 1].blocks.push_back(Heading(gen.Pick(results)));
    }
    const SectionSpan span = DetectMethodSpan(doc);
    CHECK(span == DetectMethodSpan(doc));
    CHECK(span.start_page >= 1);
    CHECK(span.end_page <= n);
    CHECK(span.start_page <= span.end_page);
    if (plant) {
      CHECK(span.mode == DetectionMode::kHeadingMatch);
      CHECK(span.start_page == m);
      CHECK(span.end_page == (r == m ? m : r - 1));
    } else {
      CHECK(span.mode == DetectionMode::kFallbackFullText);
    }
    if (span.mode == DetectionMode::kFallbackFullText) {
      CHECK(span.start_page == 1);
      CHECK(span.end_page == n);
    }
  }
}

}  // TEST_SUITE

}  // namespace
}  // namespace instrx
