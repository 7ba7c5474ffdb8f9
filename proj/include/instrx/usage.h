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

#ifndef INSTRX_USAGE_H_
#define INSTRX_USAGE_H_

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace instrx {

// Token and latency accounting for one or more backend calls. Aggregation is
// component-wise addition; backend_name is kept from the left operand unless
// it is empty.
struct UsageStats {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t wall_time_ms = 0;
  std::string backend_name;

  std::int64_t total_tokens() const { return input_tokens + output_tokens; }

  UsageStats& operator+=(const UsageStats& other) {
    input_tokens += other.input_tokens;
    output_tokens += other.output_tokens;
    wall_time_ms += other.wall_time_ms;
    if (backend_name.empty()) backend_name = other.backend_name;
    return *this;
  }

  friend UsageStats operator+(UsageStats a, const UsageStats& b) {
    a += b;
    return a;
  }

  bool operator==(const UsageStats&) const = default;
};

inline void to_json(nlohmann::json& j, const UsageStats& u) {
  j = nlohmann::json{{"input_tokens", u.input_tokens},
                     {"output_tokens", u.output_tokens},
                     {"wall_time_ms", u.wall_time_ms},
                     {"backend_name", u.backend_name}};
}

inline void from_json(const nlohmann::json& j, UsageStats& u) {
  u.input_tokens = j.value("input_tokens", std::int64_t{0});
  u.output_tokens = j.value("output_tokens", std::int64_t{0});
  u.wall_time_ms = j.value("wall_time_ms", std::int64_t{0});
  u.backend_name = j.value("backend_name", std::string());
}

}  // namespace instrx

#endif  // INSTRX_USAGE_H_
