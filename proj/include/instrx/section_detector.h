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

#ifndef INSTRX_SECTION_DETECTOR_H_
#define INSTRX_SECTION_DETECTOR_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "instrx/doc_model.h"

namespace instrx {

enum class DetectionMode { kHeadingMatch, kFallbackFullText };

const char* DetectionModeName(DetectionMode mode);

struct SectionSpan {
  int start_page = 1;
  int end_page = 1;
  DetectionMode mode = DetectionMode::kFallbackFullText;
  std::optional<std::string> matched_heading;

  PageRange range() const { return {start_page, end_page}; }

  bool operator==(const SectionSpan&) const = default;
};

nlohmann::json SectionSpanToJson(const SectionSpan& span);

// Heading keyword tables. Phrases are matched case-insensitively as whole
// words against heading text after leading numbering is removed.
struct SectionKeywords {
  std::vector<std::string> methods = {
      "method",           "methods",          "methodology",
      "materials and methods", "data and methods", "research design"};
  std::vector<std::string> results = {"result", "results", "findings",
                                      "analysis and results", "discussion"};
};

// Removes leading section numbering such as "3.", "3.2", "IV.", "(b)".
std::string StripHeadingNumbering(std::string_view heading);

// Lowercased, accent-folded words of a heading, numbering removed, joined by
// single spaces.
std::string HeadingWords(std::string_view heading);

bool HeadingMatches(std::string_view heading,
                    const std::vector<std::string>& phrases);

// Finds the methods section by heading keywords. The span runs from the first
// methods-family heading's page up to the page before the first
// results-family heading that follows it (or that page itself when both
// headings share it). Anything else falls back to the whole document.
SectionSpan DetectMethodSpan(const ParsedDocument& doc,
                             const SectionKeywords& keywords = {});

}  // namespace instrx

#endif  // INSTRX_SECTION_DETECTOR_H_
