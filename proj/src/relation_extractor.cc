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

#include "instrx/relation_extractor.h"

#include <algorithm>
#include <set>

#include "instrx/error.h"
#include "instrx/parallel.h"
#include "instrx/text_util.h"

namespace instrx {
namespace {

using nlohmann::json;


struct TypeInfo {
  InstrumentType type;
  const char* id;
  const char* label;
};

constexpr TypeInfo kTypes[] = {
    {InstrumentType::kSurveyQuestionnaire, "survey_questionnaire", "Survey/Questionnaire"},
    {InstrumentType::kInterviewProtocol, "interview_protocol", "Interview Protocol"},
    {InstrumentType::kObservationProtocol, "observation_protocol", "Observation Protocol"},
    {InstrumentType::kTestAssessment, "test_assessment", "Test/Assessment"},
    {InstrumentType::kOtherTool, "other_tool", "Other Tool"},
};

// Word-level cues, checked in this order.
struct TypeCue {
  const char* word;
  InstrumentType type;
};

constexpr TypeCue kTypeCues[] = {
    {"interview", InstrumentType::kInterviewProtocol},
    {"interviews", InstrumentType::kInterviewProtocol},
    {"observation", InstrumentType::kObservationProtocol},
    {"observations", InstrumentType::kObservationProtocol},
    {"observational", InstrumentType::kObservationProtocol},
    {"survey", InstrumentType::kSurveyQuestionnaire},
    {"surveys", InstrumentType::kSurveyQuestionnaire},
    {"questionnaire", InstrumentType::kSurveyQuestionnaire},
    {"questionnaires", InstrumentType::kSurveyQuestionnaire},
    {"inventory", InstrumentType::kSurveyQuestionnaire},
    {"test", InstrumentType::kTestAssessment},
    {"tests", InstrumentType::kTestAssessment},
    {"assessment", InstrumentType::kTestAssessment},
    {"assessments", InstrumentType::kTestAssessment},
    {"exam", InstrumentType::kTestAssessment},
    {"examination", InstrumentType::kTestAssessment},
    {"battery", InstrumentType::kTestAssessment},
    {"checklist", InstrumentType::kOtherTool},
    {"checklists", InstrumentType::kOtherTool},
    {"rubric", InstrumentType::kOtherTool},
    {"other", InstrumentType::kOtherTool},
};

std::string FlatWords(std::string_view s) {
  std::string copy(s);
  std::replace(copy.begin(), copy.end(), '(', ' ');
  std::replace(copy.begin(), copy.end(), ')', ' ');
  return NormalizeKey(copy).key;
}

std::vector<std::string> StringList(const json& payload, const char* field) {
  std::vector<std::string> out;
  if (auto it = payload.find(field); it != payload.end() && it->is_array()) {
    for (const auto& v : *it) {
      if (v.is_string()) out.push_back(v.get<std::string>());
    }
  }
  return out;
}

}  // namespace

const char* InstrumentTypeId(InstrumentType type) {
  for (const auto& t : kTypes) {
    if (t.type == type) return t.id;
  }
  return "other_tool";
}

const char* InstrumentTypeLabel(InstrumentType type) {
  for (const auto& t : kTypes) {
    if (t.type == type) return t.label;
  }
  return "Other Tool";
}

std::optional<InstrumentType> TypeAliasMap(std::string_view raw) {
  const std::string words = FlatWords(raw);
  if (words.empty()) return std::nullopt;
  for (const auto& t : kTypes) {
    if (words == FlatWords(t.id) || words == FlatWords(t.label)) return t.type;
  }
  const std::string padded = " " + words + " ";
  for (const auto& cue : kTypeCues) {
    if (padded.find(std::string(" ") + cue.word + " ") != std::string::npos) {
      return cue.type;
    }
  }
  return std::nullopt;
}

std::vector<std::string> DedupStrings(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& item : items) {
    std::string trimmed = text::CollapseWhitespace(item);
    if (trimmed.empty()) continue;
    if (seen.insert(text::Fold(trimmed)).second) out.push_back(std::move(trimmed));
  }
  return out;
}

json RecordsToJson(std::string_view doc_id, const std::vector<InstrumentRecord>& records) {
  json instruments = json::array();
  for (const auto& r : records) {
    instruments.push_back({{"name", r.canonical_name},
                           {"type", InstrumentTypeLabel(r.instrument_type)},
                           {"respondents", r.respondents},
                           {"constructs", r.constructs},
                           {"outcomes", r.outcomes},
                           {"evidence", r.evidence}});
  }
  return {{"doc_id", doc_id}, {"instruments", std::move(instruments)}};
}

std::vector<InstrumentRecord> RecordsFromJson(const json& j) {
  auto fail = [](const std::string& what) {
    return Error(ErrorKind::kMalformedInput, "record file: " + what);
  };
  if (!j.is_object() || !j.contains("doc_id") || !j["doc_id"].is_string()) {
    throw fail("missing string \"doc_id\"");
  }
  if (!j.contains("instruments") || !j["instruments"].is_array()) {
    throw fail("missing array \"instruments\"");
  }
  std::vector<InstrumentRecord> out;
  for (const json& item : j["instruments"]) {
    if (!item.is_object() || !item.contains("name") || !item["name"].is_string()) {
      throw fail("instrument without a string \"name\"");
    }
    InstrumentRecord r;
    r.doc_id = j["doc_id"].get<std::string>();
    r.canonical_name = item["name"].get<std::string>();
    const std::string type = item.value("type", std::string());
    r.instrument_type = TypeAliasMap(type).value_or(InstrumentType::kOtherTool);
    r.respondents = StringList(item, "respondents");
    r.constructs = StringList(item, "constructs");
    r.outcomes = StringList(item, "outcomes");
    if (auto it = item.find("evidence"); it != item.end() && it->is_object()) {
      for (const auto& [field, quotes] : it->items()) {
        r.evidence[field] = StringList(*it, field.c_str());
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

const json& RelationSchema() {
  static const json kSchema = json::parse(R"({
    "type": "object",
    "required": ["type", "respondents", "constructs", "outcomes"],
    "properties": {
      "type": {"type": "string"},
      "respondents": {"type": "array", "items": {"type": "string"}},
      "constructs": {"type": "array", "items": {"type": "string"}},
      "outcomes": {"type": "array", "items": {"type": "string"}},
      "evidence": {
        "type": "object",
        "properties": {
          "type": {"type": "array", "items": {"type": "string"}},
          "respondents": {"type": "array", "items": {"type": "string"}},
          "constructs": {"type": "array", "items": {"type": "string"}},
          "outcomes": {"type": "array", "items": {"type": "string"}}
        }
      }
    }
  })");
  return kSchema;
}

std::vector<std::size_t> SelectChunksForAnchor(const CanonicalInstrument& anchor,
                                               const std::vector<TextChunk>& chunks) {
  std::set<std::string> needles;
  auto add = [&](std::string_view name) {
    for (const std::string& part : NormalizeKey(name).parts()) needles.insert(part);
  };
  add(anchor.canonical_name);
  for (const auto& s : anchor.surface_names) add(s);

  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const std::string haystack = " " + FlatWords(chunks[i].text) + " ";
    for (const std::string& needle : needles) {
      if (haystack.find(" " + needle + " ") != std::string::npos) {
        selected.push_back(i);
        break;
      }
    }
  }
  if (selected.empty()) {
    for (std::size_t i = 0; i < chunks.size(); ++i) selected.push_back(i);
  }
  return selected;
}

std::vector<json> RelationOutcome::ToJsonLines() const {
  std::vector<json> lines;
  for (const auto& c : calls) {
    lines.push_back({{"event", "relation_call"},
                     {"canonical_name", c.canonical_name},
                     {"request_id", c.request_id},
                     {"fingerprint", c.fingerprint},
                     {"attempts", c.attempts},
                     {"usage", c.usage},
                     {"chunk_indices", c.chunk_indices},
                     {"degraded", c.degraded},
                     {"type_coerced", c.type_coerced}});
  }
  for (const auto& w : warnings) lines.push_back({{"event", "warning"}, {"message", w}});
  return lines;
}

// ---------------------------------------------------------------------------

RelationExtractor::RelationExtractor(Gateway& gateway, const PromptTemplates& templates,
                                     const InstrumentDictionary* dict,
                                     RelationOptions options)
    : gateway_(gateway), templates_(templates), dict_(dict), options_(options) {}

RelationOutcome RelationExtractor::Extract(std::string_view doc_id,
                                           const std::vector<CanonicalInstrument>& anchors,
                                           const std::vector<TextChunk>& chunks) const {
  RelationOutcome out;
  out.records.resize(anchors.size());
  out.calls.resize(anchors.size());
  std::vector<std::vector<std::string>> notes(anchors.size());

  ParallelFor(anchors.size(), options_.max_concurrency, [&](std::size_t a) {
    const CanonicalInstrument& anchor = anchors[a];
    RelationCall& call = out.calls[a];
    InstrumentRecord& record = out.records[a];
    record.doc_id = std::string(doc_id);
    record.canonical_name = anchor.canonical_name;
    call.canonical_name = anchor.canonical_name;
    call.chunk_indices = SelectChunksForAnchor(anchor, chunks);

    std::string chunk_text;
    for (std::size_t i : call.chunk_indices) {
      chunk_text += "[chunk " + std::to_string(i) + "]\n" + chunks[i].text + "\n\n";
    }
    PromptRequest req;
    req.request_id = std::string(doc_id) + "/relation/" + anchor.canonical_name;
    req.system_text = templates_.system;
    req.user_text = RenderTemplate(templates_.relation,
                                   {{"anchor_name", anchor.canonical_name},
                                    {"surface_forms", json(anchor.surface_names).dump()},
                                    {"chunks", chunk_text},
                                    {"schema", RelationSchema().dump()}});
    req.response_schema = RelationSchema();
    req.max_output_tokens = options_.max_output_tokens;
    call.request_id = req.request_id;
    call.fingerprint = Fingerprint(req);

    CompletionResult result;
    try {
      result = gateway_.Complete(req);
    } catch (const SchemaViolation& e) {
      call.attempts = e.attempts();
      call.usage = e.usage();
      call.degraded = true;
      const DictEntry* entry = dict_ != nullptr ? dict_->Find(anchor.canonical_name) : nullptr;
      record.instrument_type = entry != nullptr && entry->default_type
                                   ? *entry->default_type
                                   : InstrumentType::kOtherTool;
      notes[a].push_back("relation response for \"" + anchor.canonical_name +
                         "\" violated the schema; record left empty");
      return;
    }
    call.attempts = result.attempts;
    call.usage = result.usage;

    const json& payload = *result.parsed;
    const std::string raw_type = payload.at("type").get<std::string>();
    if (auto type = TypeAliasMap(raw_type)) {
      record.instrument_type = *type;
    } else {
      record.instrument_type = InstrumentType::kOtherTool;
      call.type_coerced = true;
      notes[a].push_back("instrument type \"" + raw_type + "\" for \"" +
                         anchor.canonical_name + "\" coerced to other_tool");
    }
    record.respondents = DedupStrings(StringList(payload, "respondents"));
    record.constructs = DedupStrings(StringList(payload, "constructs"));
    record.outcomes = DedupStrings(StringList(payload, "outcomes"));

    if (auto it = payload.find("evidence"); it != payload.end() && it->is_object()) {
      for (const auto& [field, quotes] : it->items()) {
        std::vector<std::string> kept;
        for (const std::string& quote : DedupStrings(StringList(*it, field.c_str()))) {
          const bool found = std::any_of(
              call.chunk_indices.begin(), call.chunk_indices.end(),
              [&](std::size_t i) { return chunks[i].text.find(quote) != std::string::npos; });
          if (found) {
            kept.push_back(quote);
          } else {
            notes[a].push_back("dropped evidence for \"" + anchor.canonical_name + "\"." +
                               field + " not found in its chunks");
          }
        }
        if (!kept.empty()) record.evidence[field] = std::move(kept);
      }
    }
  });

  for (std::size_t a = 0; a < anchors.size(); ++a) {
    out.usage += out.calls[a].usage;
    for (auto& n : notes[a]) out.warnings.push_back(std::move(n));
  }
  return out;
}

}  // namespace instrx
