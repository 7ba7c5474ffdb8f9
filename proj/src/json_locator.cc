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

#include "instrx/json_locator.h"

#include <cctype>

namespace instrx {
namespace {

class Scanner {
 public:
  Scanner(std::string_view text, std::map<std::string, std::size_t>& out)
      : text_(text), out_(out) {}

  void Run() {
    SkipWs();
    Value("");
  }

 private:
  void SkipWs() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool Value(const std::string& pointer) {
    if (pos_ >= text_.size()) return false;
    out_[pointer] = pos_;
    const char c = text_[pos_];
    if (c == '{') return Object(pointer);
    if (c == '[') return Array(pointer);
    if (c == '"') return String(nullptr);
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' &&
           text_[pos_] != '}' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return true;
  }

  bool String(std::string* raw) {
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') {
        if (raw != nullptr && pos_ + 1 < text_.size()) {
          // Keys with escapes are rare; keep the simple ones readable.
          const char e = text_[pos_ + 1];
          raw->push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
        }
        pos_ += 2;
        continue;
      }
      if (raw != nullptr) raw->push_back(text_[pos_]);
      ++pos_;
    }
    ++pos_;  // closing quote
    return pos_ <= text_.size();
  }

  bool Object(const std::string& pointer) {
    ++pos_;
    SkipWs();
    if (pos_ < text_.size() && text_[pos_] == '}') {
      ++pos_;
      return true;
    }
    while (pos_ < text_.size()) {
      SkipWs();
      std::string key;
      if (pos_ >= text_.size() || text_[pos_] != '"' || !String(&key)) {
        return false;
      }
      SkipWs();
      if (pos_ >= text_.size() || text_[pos_] != ':') return false;
      ++pos_;
      SkipWs();
      if (!Value(pointer + "/" + EscapePointerToken(key))) return false;
      SkipWs();
      if (pos_ >= text_.size()) return false;
      if (text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (text_[pos_] == '}') {
        ++pos_;
        return true;
      }
      return false;
    }
    return false;
  }

  bool Array(const std::string& pointer) {
    ++pos_;
    SkipWs();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return true;
    }
    for (std::size_t index = 0; pos_ < text_.size(); ++index) {
      SkipWs();
      if (!Value(pointer + "/" + std::to_string(index))) return false;
      SkipWs();
      if (pos_ >= text_.size()) return false;
      if (text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (text_[pos_] == ']') {
        ++pos_;
        return true;
      }
      return false;
    }
    return false;
  }

  std::string_view text_;
  std::map<std::string, std::size_t>& out_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string EscapePointerToken(std::string_view token) {
  std::string out;
  for (char c : token) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

JsonLocator::JsonLocator(std::string_view text) : text_(text) {
  Scanner(text, offsets_).Run();
}

SourcePosition JsonLocator::PositionOf(std::string_view text,
                                       std::size_t offset) {
  SourcePosition pos;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++pos.line;
      pos.column = 1;
    } else {
      ++pos.column;
    }
  }
  return pos;
}

SourcePosition JsonLocator::Locate(const std::string& pointer) const {
  std::string p = pointer;
  while (true) {
    auto it = offsets_.find(p);
    if (it != offsets_.end()) return PositionOf(text_, it->second);
    if (p.empty()) return {};
    p.erase(p.rfind('/'));
  }
}

std::string JsonLocator::Describe(const std::string& pointer) const {
  const SourcePosition pos = Locate(pointer);
  return "line " + std::to_string(pos.line) + ", column " +
         std::to_string(pos.column);
}

}  // namespace instrx
