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

#ifndef INSTRX_TEXT_UTIL_H_
#define INSTRX_TEXT_UTIL_H_

#include <cstddef>
#include <string>
#include <string_view>

namespace instrx::text {

// Decodes UTF-8. Invalid sequences decode to U+FFFD, one per offending byte.
std::u32string DecodeUtf8(std::string_view s);
std::string EncodeUtf8(std::u32string_view s);
void AppendUtf8(char32_t cp, std::string& out);

// Length in bytes of the UTF-8 sequence starting with lead byte `c`, as
// accepted by DecodeUtf8 (1 for invalid lead bytes).
std::size_t Utf8SequenceLength(std::string_view s, std::size_t pos);

bool IsSpace(char32_t cp);

// ASCII letters and digits, plus every non-ASCII code point that is neither
// whitespace nor in the Latin-1, General Punctuation, CJK symbol or fullwidth
// punctuation ranges.
bool IsAlnum(char32_t cp);

bool IsUpper(char32_t cp);

// Lowercases and strips diacritics for Latin-1 and Latin Extended-A, and
// drops combining diacritical marks. Other code points pass through
// unchanged (ASCII is lowercased). The result may be empty or longer than one
// code point (e.g. U+00DF -> "ss").
std::u32string FoldChar(char32_t cp);

// FoldChar applied to every code point.
std::string Fold(std::string_view s);

std::string Trim(std::string_view s);

// Trims and replaces every whitespace run with one ASCII space.
std::string CollapseWhitespace(std::string_view s);

// Levenshtein distance over code points (unit costs).
std::size_t EditDistance(std::u32string_view a, std::u32string_view b);

}  // namespace instrx::text

#endif  // INSTRX_TEXT_UTIL_H_
