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

#include <regex>

#include "instrx/text_util.h"

namespace instrx {
namespace {

struct HeadingRef {
  int page_number;
  const Block* block;
};

SectionSpan FullDocument(const ParsedDocument& doc) {
  return {doc.first_page(), doc.last_page(), DetectionMode::kFallbackFullText,
          std::nullopt};
}

}  // namespace

const char* DetectionModeName(DetectionMode mode) {
  return mode == DetectionMode::kHeadingMatch ? "heading_match"
                                              : "fallback_full_text";
}

nlohmann::json SectionSpanToJson(const SectionSpan& span) {
  nlohmann::json j = {{"start_page", span.start_page},
                      {"end_page", span.end_page},
                      {"detection_mode", DetectionModeName(span.mode)}};
  j["matched_heading"] = span.matched_heading ? nlohmann::json(*span.matched_heading)
                                              : nlohmann::json(nullptr);
  return j;
}

std::string StripHeadingNumbering(std::string_view heading) {
  static const std::regex kNumbering(
      R"(^\s*(?:(?:\d+(?:\.\d+)*(?:\.|(?=\s|$))|[IVXLCivxlc]+[.):]|[A-Za-z][.)]|\([0-9A-Za-z]+\))\s*|[^\w\s]+\s*))");
  std::string s(heading);
  std::smatch m;
  while (!s.empty() && std::regex_search(s, m, kNumbering) && m.length(0) > 0) {
    s.erase(0, static_cast<std::size_t>(m.length(0)));
  }
  return s;
}

std::string HeadingWords(std::string_view heading) {
  std::string words;
  for (char32_t cp : text::DecodeUtf8(text::Fold(StripHeadingNumbering(heading)))) {
    if (text::IsAlnum(cp)) {
      text::AppendUtf8(cp, words);
    } else if (!words.empty() && words.back() != ' ') {
      words.push_back(' ');
    }
  }
  while (!words.empty() && words.back() == ' ') words.pop_back();
  return words;
}

bool HeadingMatches(std::string_view heading,
                    const std::vector<std::string>& phrases) {
  const std::string padded = " " + HeadingWords(heading) + " ";
  for (const std::string& phrase : phrases) {
    const std::string key = HeadingWords(phrase);
    if (!key.empty() && padded.find(" " + key + " ") != std::string::npos) {
      return true;
    }
  }
  return false;
}

SectionSpan DetectMethodSpan(const ParsedDocument& doc,
                             const SectionKeywords& keywords) {
  std::vector<HeadingRef> headings;
  for (const Page& page : doc.pages) {
    for (const Block& block : page.blocks) {
      if (block.kind == BlockKind::kHeading) {
        headings.push_back({page.page_number, &block});
      }
    }
  }

  std::optional<std::size_t> methods;
  for (std::size_t i = 0; i < headings.size(); ++i) {
    const std::string& text = headings[i].block->text;
    if (HeadingMatches(text, keywords.methods)) {
      methods = i;
      break;
    }
    // A results heading ahead of any methods heading means the layout is not
    // the one we can excerpt safely.
    if (HeadingMatches(text, keywords.results)) return FullDocument(doc);
  }
  if (!methods) return FullDocument(doc);

  const HeadingRef& start = headings[*methods];
  for (std::size_t i = *methods + 1; i < headings.size(); ++i) {
    const std::string& text = headings[i].block->text;
    if (HeadingMatches(text, keywords.methods) ||
        !HeadingMatches(text, keywords.results)) {
      continue;
    }
    const int end = headings[i].page_number == start.page_number
                        ? start.page_number
                        : headings[i].page_number - 1;
    return {start.page_number, end, DetectionMode::kHeadingMatch,
            start.block->text};
  }
  return FullDocument(doc);
}

}  // namespace instrx
