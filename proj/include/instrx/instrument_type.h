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

#ifndef INSTRX_INSTRUMENT_TYPE_H_
#define INSTRX_INSTRUMENT_TYPE_H_

#include <optional>
#include <string>
#include <string_view>

namespace instrx {

// The five research-instrument categories.
enum class InstrumentType {
  kSurveyQuestionnaire,
  kInterviewProtocol,
  kObservationProtocol,
  kTestAssessment,
  kOtherTool,
};

// Identifier form: "survey_questionnaire", "observation_protocol", ...
const char* InstrumentTypeId(InstrumentType type);

// Display form written to record files: "Survey/Questionnaire",
// "Interview Protocol", "Observation Protocol", "Test/Assessment",
// "Other Tool".
const char* InstrumentTypeLabel(InstrumentType type);

// Case-insensitive lookup of common surface labels ("survey",
// "questionnaire", "Observation Protocol", "checklist", ...), including the
// identifier and display forms above. nullopt means no match; callers coerce
// to kOtherTool.
std::optional<InstrumentType> TypeAliasMap(std::string_view raw);

}  // namespace instrx

#endif  // INSTRX_INSTRUMENT_TYPE_H_
