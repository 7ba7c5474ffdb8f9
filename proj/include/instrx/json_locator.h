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

#ifndef INSTRX_JSON_LOCATOR_H_
#define INSTRX_JSON_LOCATOR_H_

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

namespace instrx {

struct SourcePosition {
  std::size_t line = 1;  // 1-based
  std::size_t column = 1;
};

// Maps JSON pointers ("/pages/0/blocks/2") to the byte offset where that
// value starts in `text`. `text` must already be valid JSON; scanning stops
// quietly on anything unexpected.
class JsonLocator {
 public:
  explicit JsonLocator(std::string_view text);

  // Position of the value at `pointer`, or of its nearest indexed ancestor.
  SourcePosition Locate(const std::string& pointer) const;

  // "line L, column C" for `pointer`.
  std::string Describe(const std::string& pointer) const;

  static SourcePosition PositionOf(std::string_view text, std::size_t offset);

 private:
  std::string_view text_;
  std::map<std::string, std::size_t> offsets_;
};

// RFC 6901 escaping of a single reference token.
std::string EscapePointerToken(std::string_view token);

}  // namespace instrx

#endif  // INSTRX_JSON_LOCATOR_H_
