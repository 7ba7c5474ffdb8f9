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

#include "instrx/json_schema.h"

#include <vector>

#include "instrx/json_locator.h"

namespace instrx {
namespace {

using nlohmann::json;

bool HasType(const json& value, const std::string& type) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "number") return value.is_number();
  if (type == "integer") return value.is_number_integer();
  if (type == "boolean") return value.is_boolean();
  if (type == "null") return value.is_null();
  return false;
}

std::optional<std::string> Validate(const json& value, const json& schema,
                                    const std::string& ptr) {
  auto fail = [&](const std::string& what) {
    return std::optional<std::string>((ptr.empty() ? "/" : ptr) + ": " + what);
  };
  if (!schema.is_object()) return std::nullopt;

  if (auto it = schema.find("type"); it != schema.end()) {
    std::vector<std::string> types;
    if (it->is_string()) {
      types.push_back(it->get<std::string>());
    } else if (it->is_array()) {
      for (const auto& t : *it) types.push_back(t.get<std::string>());
    }
    bool ok = types.empty();
    for (const auto& t : types) ok = ok || HasType(value, t);
    if (!ok) return fail("expected type " + it->dump() + ", got " + value.type_name());
  }

  if (auto it = schema.find("enum"); it != schema.end() && it->is_array()) {
    bool found = false;
    for (const auto& option : *it) found = found || option == value;
    if (!found) return fail("value " + value.dump() + " not in " + it->dump());
  }

  if (value.is_string()) {
    if (auto it = schema.find("minLength"); it != schema.end()) {
      if (value.get<std::string>().size() < it->get<std::size_t>()) {
        return fail("string shorter than " + it->dump());
      }
    }
  }

  if (value.is_object()) {
    const json* properties = nullptr;
    if (auto it = schema.find("properties"); it != schema.end()) properties = &*it;
    if (auto it = schema.find("required"); it != schema.end()) {
      for (const auto& key : *it) {
        if (!value.contains(key.get<std::string>())) {
          return fail("missing required property " + key.dump());
        }
      }
    }
    const bool closed = schema.value("additionalProperties", true) == false;
    for (const auto& [key, child] : value.items()) {
      const std::string child_ptr = ptr + "/" + EscapePointerToken(key);
      if (properties != nullptr && properties->contains(key)) {
        if (auto err = Validate(child, (*properties)[key], child_ptr)) return err;
      } else if (closed) {
        return fail("unexpected property \"" + key + "\"");
      }
    }
  }

  if (value.is_array()) {
    if (auto it = schema.find("minItems"); it != schema.end()) {
      if (value.size() < it->get<std::size_t>()) {
        return fail("array shorter than " + it->dump());
      }
    }
    if (auto it = schema.find("items"); it != schema.end()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (auto err = Validate(value[i], *it, ptr + "/" + std::to_string(i))) {
          return err;
        }
      }
    }
  }
  return std::nullopt;
}

std::optional<json> TryParse(std::string_view text) {
  json parsed = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) return std::nullopt;
  return parsed;
}

}  // namespace

std::optional<std::string> ValidateAgainstSchema(const json& value,
                                                 const json& schema) {
  return Validate(value, schema, "");
}

std::optional<json> ParseModelJson(std::string_view raw, std::string* error) {
  if (auto parsed = TryParse(raw)) return parsed;

  // ```json ... ``` fences.
  if (auto open = raw.find("```"); open != std::string_view::npos) {
    auto body_start = raw.find('\n', open);
    auto close = body_start == std::string_view::npos
                     ? std::string_view::npos
                     : raw.find("```", body_start);
    if (close != std::string_view::npos) {
      if (auto parsed = TryParse(raw.substr(body_start, close - body_start))) {
        return parsed;
      }
    }
  }

  const auto first = raw.find('{');
  const auto last = raw.rfind('}');
  if (first != std::string_view::npos && last != std::string_view::npos &&
      last > first) {
    if (auto parsed = TryParse(raw.substr(first, last - first + 1))) return parsed;
  }

  if (error != nullptr) {
    try {
      const json ignored = json::parse(raw);
      static_cast<void>(ignored);
    } catch (const json::parse_error& e) {
      *error = std::string("response is not valid JSON: ") + e.what();
    }
  }
  return std::nullopt;
}

}  // namespace instrx
