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

#include "instrx/extraction_chain.h"

#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

#include "instrx/error.h"
#include "instrx/parallel.h"
#include "instrx/text_util.h"

namespace instrx {
namespace {

using nlohmann::json;

std::string ReadFile(const std::filesystem::path& path, bool required) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!required) return {};
    throw Error(ErrorKind::kConfigError, "missing prompt template " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string ChunkRequestId(std::string_view doc_id, ChainStep step, std::size_t chunk) {
  return std::string(doc_id) + "/" + ChainStepName(step) + "/" + std::to_string(chunk);
}

// Mentions from a validated {"instruments": [...]} payload.
std::vector<InstrumentMention> MentionsFromPayload(const json& payload,
                                                   std::size_t chunk_index,
                                                   const std::string& chunk_text) {
  std::vector<InstrumentMention> out;
  for (const json& item : payload.at("instruments")) {
    InstrumentMention m;
    m.surface_name = text::CollapseWhitespace(item.at("name").get<std::string>());
    if (m.surface_name.empty()) continue;
    m.chunk_index = chunk_index;
    if (auto it = item.find("evidence"); it != item.end() && it->is_string()) {
      const std::string quote = text::Trim(it->get<std::string>());
      if (!quote.empty() && chunk_text.find(quote) != std::string::npos) {
        m.evidence = quote;
      }
    }
    if (auto it = item.find("note"); it != item.end() && it->is_string()) {
      m.confidence_note = it->get<std::string>();
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

const char* ChainStepName(ChainStep step) {
  switch (step) {
    case ChainStep::kExtraction: return "extraction";
    case ChainStep::kSummarization: return "summarization";
    case ChainStep::kDecision: return "decision";
  }
  return "extraction";
}

std::optional<ChainStep> ParseChainStep(std::string_view name) {
  const std::string n = text::Fold(name);
  if (n == "extraction" || n == "ex") return ChainStep::kExtraction;
  if (n == "summarization" || n == "sum") return ChainStep::kSummarization;
  if (n == "decision" || n == "dec") return ChainStep::kDecision;
  return std::nullopt;
}

const char* InputModeName(InputMode mode) {
  return mode == InputMode::kMethodExcerpt ? "method_excerpt" : "full_text";
}

std::optional<InputMode> ParseInputMode(std::string_view name) {
  if (name == "method_excerpt") return InputMode::kMethodExcerpt;
  if (name == "full_text") return InputMode::kFullText;
  return std::nullopt;
}

std::vector<ChainStep> ChainConfig::steps() const {
  std::vector<ChainStep> out;
  if (extraction) out.push_back(ChainStep::kExtraction);
  if (summarization) out.push_back(ChainStep::kSummarization);
  if (decision) out.push_back(ChainStep::kDecision);
  return out;
}

void ChainConfig::Validate() const {
  if (!extraction && !summarization && !decision) {
    throw Error(ErrorKind::kConfigError, "chain config enables no steps");
  }
  if (decision && !extraction && !summarization) {
    throw Error(ErrorKind::kConfigError,
                "chain config " + Label() +
                    ": decision requires extraction or summarization");
  }
}

std::string ChainConfig::Label() const {
  std::string label;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!label.empty()) label += "+";
    label += name;
  };
  add(extraction, "Ex");
  add(summarization, "Sum");
  add(decision, "Dec");
  if (label.empty()) label = "none";
  return label + "/" + InputModeName(input_mode);
}

ChainConfig ChainConfig::FromStepNames(const std::vector<std::string>& steps,
                                       InputMode mode) {
  ChainConfig cfg;
  cfg.extraction = cfg.summarization = cfg.decision = false;
  cfg.input_mode = mode;
  for (const std::string& name : steps) {
    const auto step = ParseChainStep(name);
    if (!step) throw Error(ErrorKind::kConfigError, "unknown chain step \"" + name + "\"");
    switch (*step) {
      case ChainStep::kExtraction: cfg.extraction = true; break;
      case ChainStep::kSummarization: cfg.summarization = true; break;
      case ChainStep::kDecision: cfg.decision = true; break;
    }
  }
  return cfg;
}

json MentionToJson(const InstrumentMention& m) {
  json j = {{"surface_name", m.surface_name},
            {"chunk_index", m.chunk_index},
            {"evidence", m.evidence}};
  if (m.confidence_note) j["confidence_note"] = *m.confidence_note;
  return j;
}

std::string PromptTemplates::Id() const {
  const std::string all = system + '\x1e' + extraction + '\x1e' + summarization +
                          '\x1e' + decision + '\x1e' + relation;
  return set_name + "@" + Sha256Hex(all).substr(0, 12);
}

PromptTemplates PromptTemplates::Load(const std::filesystem::path& root,
                                      const std::string& set_name) {
  const std::filesystem::path dir = root / set_name;
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::kConfigError, "template set not found: " + dir.string());
  }
  PromptTemplates t;
  t.set_name = set_name;
  t.system = ReadFile(dir / "system.txt", false);
  t.extraction = ReadFile(dir / "extraction.txt", true);
  t.summarization = ReadFile(dir / "summarization.txt", true);
  t.decision = ReadFile(dir / "decision.txt", true);
  t.relation = ReadFile(dir / "relation.txt", true);
  return t;
}

std::string RenderTemplate(std::string_view tmpl,
                           const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::string name = text::Trim(tmpl.substr(open + 2, close - open - 2));
    auto it = vars.find(name);
    if (it == vars.end()) {
      throw Error(ErrorKind::kConfigError,
                  "prompt template uses unknown placeholder {{" + name + "}}");
    }
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

const json& MentionListSchema() {
  static const json kSchema = json::parse(R"({
    "type": "object",
    "required": ["instruments"],
    "properties": {
      "instruments": {
        "type": "array",
        "items": {
          "type": "object",
          "required": ["name"],
          "properties": {
            "name": {"type": "string", "minLength": 1},
            "evidence": {"type": "string"},
            "note": {"type": "string"}
          }
        }
      }
    }
  })");
  return kSchema;
}

std::vector<json> ChainTrace::ToJsonLines() const {
  std::vector<json> lines;
  lines.push_back({{"event", "document"}, {"doc_id", doc_id}, {"config", config_label}});
  lines.push_back({{"event", "section"}, {"span", SectionSpanToJson(span)}});
  lines.push_back({{"event", "chunks"}, {"chunks", chunks}});
  for (const StepCall& c : calls) {
    lines.push_back({{"event", "call"},
                     {"step", ChainStepName(c.step)},
                     {"chunk_index", c.chunk_index ? json(*c.chunk_index) : json(nullptr)},
                     {"request_id", c.request_id},
                     {"fingerprint", c.fingerprint},
                     {"attempts", c.attempts},
                     {"usage", c.usage},
                     {"status", c.status}});
  }
  if (!chunk_mentions.empty()) {
    json per_chunk = json::array();
    for (const auto& list : chunk_mentions) {
      json items = json::array();
      for (const auto& m : list) items.push_back(MentionToJson(m));
      per_chunk.push_back(std::move(items));
    }
    lines.push_back({{"event", "extraction_mentions"}, {"per_chunk", per_chunk}});
  }
  if (!summaries.empty()) {
    lines.push_back({{"event", "summaries"}, {"per_chunk", summaries}});
  }
  json final_list = json::array();
  for (const auto& m : final_mentions) final_list.push_back(MentionToJson(m));
  lines.push_back({{"event", "mentions"},
                   {"decision_degraded", decision_degraded},
                   {"final", final_list}});
  for (const auto& w : warnings) {
    lines.push_back({{"event", "warning"}, {"message", w}});
  }
  return lines;
}

std::string MentionKey(std::string_view surface) {
  return text::Fold(text::CollapseWhitespace(surface));
}

std::vector<InstrumentMention> DedupMentions(
    const std::vector<std::vector<InstrumentMention>>& per_chunk) {
  std::vector<InstrumentMention> out;
  std::set<std::string> seen;
  for (const auto& list : per_chunk) {
    for (const auto& m : list) {
      if (seen.insert(MentionKey(m.surface_name)).second) out.push_back(m);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

ExtractionChain::ExtractionChain(Gateway& gateway, PromptTemplates templates,
                                 ChainConfig config, ChainOptions options)
    : gateway_(gateway),
      templates_(std::move(templates)),
      config_(std::move(config)),
      options_(std::move(options)) {
  config_.Validate();
}

std::pair<StepCall, std::optional<CompletionResult>> ExtractionChain::Call(
    const PromptRequest& request, ChainStep step,
    std::optional<std::size_t> chunk) const {
  StepCall call;
  call.step = step;
  call.chunk_index = chunk;
  call.request_id = request.request_id;
  call.fingerprint = Fingerprint(request);
  try {
    CompletionResult result = gateway_.Complete(request);
    call.attempts = result.attempts;
    call.usage = result.usage;
    return {std::move(call), std::move(result)};
  } catch (const SchemaViolation& e) {
    call.attempts = e.attempts();
    call.usage = e.usage();
    call.status = "schema_violation";
    return {std::move(call), std::nullopt};
  }
}

std::vector<std::vector<InstrumentMention>> ExtractionChain::RunExtractionStep(
    std::string_view doc_id, const std::vector<TextChunk>& chunks,
    ChainTrace& trace) const {
  std::vector<std::vector<InstrumentMention>> mentions(chunks.size());
  std::vector<StepCall> calls(chunks.size());
  ParallelFor(chunks.size(), options_.max_concurrency, [&](std::size_t i) {
    PromptRequest req;
    req.request_id = ChunkRequestId(doc_id, ChainStep::kExtraction, i);
    req.system_text = templates_.system;
    req.user_text = RenderTemplate(
        templates_.extraction,
        {{"chunk_text", chunks[i].text},
         {"chunk_index", std::to_string(i)},
         {"schema", MentionListSchema().dump()}});
    req.response_schema = MentionListSchema();
    req.max_output_tokens = options_.max_output_tokens;
    auto [call, result] = Call(req, ChainStep::kExtraction, i);
    if (result) mentions[i] = MentionsFromPayload(*result->parsed, i, chunks[i].text);
    calls[i] = std::move(call);
  });
  for (std::size_t i = 0; i < calls.size(); ++i) {
    if (calls[i].status != "ok") {
      trace.warnings.push_back("extraction response for chunk " + std::to_string(i) +
                               " violated the schema; chunk contributes no mentions");
    }
    trace.calls.push_back(std::move(calls[i]));
  }
  trace.chunk_mentions = mentions;
  return mentions;
}

std::vector<std::string> ExtractionChain::RunSummarizationStep(
    std::string_view doc_id, const std::vector<TextChunk>& chunks,
    ChainTrace& trace) const {
  std::vector<std::string> summaries(chunks.size());
  std::vector<StepCall> calls(chunks.size());
  ParallelFor(chunks.size(), options_.max_concurrency, [&](std::size_t i) {
    PromptRequest req;
    req.request_id = ChunkRequestId(doc_id, ChainStep::kSummarization, i);
    req.system_text = templates_.system;
    req.user_text = RenderTemplate(
        templates_.summarization,
        {{"chunk_text", chunks[i].text}, {"chunk_index", std::to_string(i)}});
    req.max_output_tokens = options_.max_output_tokens;
    auto [call, result] = Call(req, ChainStep::kSummarization, i);
    if (result) summaries[i] = result->text;
    calls[i] = std::move(call);
  });
  for (auto& c : calls) trace.calls.push_back(std::move(c));
  trace.summaries = summaries;
  return summaries;
}

std::vector<InstrumentMention> ExtractionChain::RunDecisionStep(
    std::string_view doc_id,
    const std::vector<std::vector<InstrumentMention>>& mentions,
    const std::vector<std::string>& summaries, const std::vector<TextChunk>& chunks,
    ChainTrace& trace) const {
  json mention_list = json::array();
  for (const auto& list : mentions) {
    for (const auto& m : list) {
      mention_list.push_back({{"name", m.surface_name},
                              {"chunk_index", m.chunk_index},
                              {"evidence", m.evidence}});
    }
  }
  std::string summary_text;
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    if (!summary_text.empty()) summary_text += "\n\n";
    summary_text += "[chunk " + std::to_string(i) + "] " + summaries[i];
  }
  if (summary_text.empty()) summary_text = "(none)";

  PromptRequest req;
  req.request_id = std::string(doc_id) + "/decision";
  req.system_text = templates_.system;
  req.user_text = RenderTemplate(templates_.decision,
                                 {{"mentions_json", mention_list.dump(2)},
                                  {"summaries", summary_text},
                                  {"schema", MentionListSchema().dump()}});
  req.response_schema = MentionListSchema();
  req.max_output_tokens = options_.max_output_tokens;
  auto [call, result] = Call(req, ChainStep::kDecision, std::nullopt);
  trace.calls.push_back(call);

  if (!result) {
    trace.decision_degraded = true;
    trace.warnings.push_back(
        "decision response violated the schema; using the extraction union");
    return DedupMentions(mentions);
  }

  std::vector<InstrumentMention> out;
  std::set<std::string> seen;
  for (const json& item : result->parsed->at("instruments")) {
    const std::string name = text::CollapseWhitespace(item.at("name").get<std::string>());
    const std::string key = MentionKey(name);
    if (name.empty() || !seen.insert(key).second) continue;

    // Attribute the decision to the first chunk that produced or contains it.
    const InstrumentMention* origin = nullptr;
    for (const auto& list : mentions) {
      for (const auto& m : list) {
        if (origin == nullptr && MentionKey(m.surface_name) == key) origin = &m;
      }
    }
    std::size_t chunk_index = 0;
    if (origin != nullptr) {
      chunk_index = origin->chunk_index;
    } else {
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (text::Fold(chunks[i].text).find(key) != std::string::npos) {
          chunk_index = i;
          break;
        }
      }
    }
    const std::string chunk_text = chunks.empty() ? std::string() : chunks[chunk_index].text;
    json single = {{"instruments", json::array({item})}};
    std::vector<InstrumentMention> parsed = MentionsFromPayload(single, chunk_index, chunk_text);
    InstrumentMention m = parsed.front();
    if (m.evidence.empty() && origin != nullptr) m.evidence = origin->evidence;
    out.push_back(std::move(m));
  }
  return out;
}

ChainResult ExtractionChain::Run(const ParsedDocument& doc,
                                 const ChunkerConfig& chunk_config) const {
  ChainResult out;
  ChainTrace& trace = out.trace;
  trace.doc_id = doc.doc_id;
  trace.config_label = config_.Label();

  if (config_.input_mode == InputMode::kMethodExcerpt) {
    trace.span = DetectMethodSpan(doc, options_.keywords);
  } else {
    trace.span = {doc.first_page(), doc.last_page(), DetectionMode::kFallbackFullText,
                  std::nullopt};
  }
  const FlattenedText flat = FlattenText(doc, trace.span.range());
  out.chunks = ChunkText(flat.text, flat.provenance, chunk_config);
  for (const auto& c : out.chunks) trace.chunks.push_back(ChunkSummaryToJson(c));

  if (out.chunks.empty()) {
    trace.warnings.push_back("selected span has no text; no requests issued");
    return out;
  }

  std::vector<std::vector<InstrumentMention>> mentions;
  std::vector<std::string> summaries;
  if (config_.extraction) mentions = RunExtractionStep(doc.doc_id, out.chunks, trace);
  if (config_.summarization) summaries = RunSummarizationStep(doc.doc_id, out.chunks, trace);
  if (config_.decision) {
    out.mentions = RunDecisionStep(doc.doc_id, mentions, summaries, out.chunks, trace);
  } else {
    out.mentions = DedupMentions(mentions);
    if (!config_.extraction) {
      trace.warnings.push_back("no enabled step produces instrument names");
    }
  }
  trace.final_mentions = out.mentions;
  for (const StepCall& c : trace.calls) out.usage += c.usage;
  return out;
}

}  // namespace instrx
