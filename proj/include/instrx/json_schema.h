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

#ifndef INSTRX_JSON_SCHEMA_H_
#define INSTRX_JSON_SCHEMA_H_

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace instrx {

// Validates `value` against the subset of JSON Schema used for structured
// model output: "type" (string or array of strings), "properties",
// "required", "additionalProperties" (boolean), "items", "enum",
// "minItems", "minLength". Returns the first violation as
// "<json pointer>: <message>", or nullopt when valid.
std::optional<std::string> ValidateAgainstSchema(const nlohmann::json& value,
                                                 const nlohmann::json& schema);

// Parses model output as JSON. Accepts a bare JSON value, a value wrapped in
// a Markdown code fence, or the outermost {...} span of surrounding prose.
// Returns nullopt and fills `error` when nothing parses.
std::optional<nlohmann::json> ParseModelJson(std::string_view raw,
                                             std::string* error);

}  // namespace instrx

#endif  // INSTRX_JSON_SCHEMA_H_
