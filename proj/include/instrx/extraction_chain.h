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

#ifndef INSTRX_EXTRACTION_CHAIN_H_
#define INSTRX_EXTRACTION_CHAIN_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "instrx/chunker.h"
#include "instrx/doc_model.h"
#include "instrx/llm_gateway.h"
#include "instrx/section_detector.h"
#include "instrx/usage.h"

namespace instrx {

enum class ChainStep { kExtraction, kSummarization, kDecision };
enum class InputMode { kMethodExcerpt, kFullText };

const char* ChainStepName(ChainStep step);
std::optional<ChainStep> ParseChainStep(std::string_view name);
const char* InputModeName(InputMode mode);
std::optional<InputMode> ParseInputMode(std::string_view name);

// Which prompt steps run and on what text. Steps always execute in the
// order extraction, summarization, decision.
struct ChainConfig {
  bool extraction = true;
  bool summarization = true;
  bool decision = true;
  InputMode input_mode = InputMode::kMethodExcerpt;
  std::string prompt_template_set = "default";

  std::vector<ChainStep> steps() const;

  // Throws Error(kConfigError) when no step is enabled, or when decision is
  // enabled without extraction or summarization.
  void Validate() const;

  // "Ex+Sum+Dec/method_excerpt".
  std::string Label() const;

  static ChainConfig FromStepNames(const std::vector<std::string>& steps,
                                   InputMode mode);
};

struct InstrumentMention {
  std::string surface_name;
  std::size_t chunk_index = 0;
  std::string evidence;  // empty unless it is a verbatim quote of the chunk
  std::optional<std::string> confidence_note;

  bool operator==(const InstrumentMention&) const = default;
};

nlohmann::json MentionToJson(const InstrumentMention& m);

// Prompt text for one template set, loaded from
// <root>/<set>/{system,extraction,summarization,decision,relation}.txt.
// system.txt is optional. Placeholders are written {{name}}.
struct PromptTemplates {
  std::string set_name;
  std::string system;
  std::string extraction;
  std::string summarization;
  std::string decision;
  std::string relation;

  // "<set>@<first 12 hex digits of the SHA-256 of all templates>".
  std::string Id() const;

  static PromptTemplates Load(const std::filesystem::path& root,
                              const std::string& set_name);
};

// Substitutes {{name}} placeholders in one pass; substituted text is never
// rescanned. Throws Error(kConfigError) on an unknown placeholder.
std::string RenderTemplate(std::string_view tmpl,
                           const std::map<std::string, std::string>& vars);

// Response schema shared by the extraction and decision steps.
const nlohmann::json& MentionListSchema();

struct StepCall {
  ChainStep step = ChainStep::kExtraction;
  std::optional<std::size_t> chunk_index;
  std::string request_id;
  std::string fingerprint;
  int attempts = 0;
  UsageStats usage;
  std::string status = "ok";  // "ok" or "schema_violation"
};

struct ChainTrace {
  std::string doc_id;
  std::string config_label;
  SectionSpan span;
  std::vector<nlohmann::json> chunks;  // ChunkSummaryToJson
  std::vector<StepCall> calls;         // step order, chunk order within step
  std::vector<std::vector<InstrumentMention>> chunk_mentions;
  std::vector<std::string> summaries;
  std::vector<InstrumentMention> final_mentions;
  bool decision_degraded = false;
  std::vector<std::string> warnings;

  // Trace events, one JSON object per line of the trace file.
  std::vector<nlohmann::json> ToJsonLines() const;
};

struct ChainResult {
  std::vector<InstrumentMention> mentions;
  std::vector<TextChunk> chunks;
  ChainTrace trace;
  UsageStats usage;
};

struct ChainOptions {
  std::size_t max_concurrency = 4;  // chunk fan-out inside one step
  std::int64_t max_output_tokens = 2048;
  SectionKeywords keywords;
};

// Case-insensitive dedup key for surface forms.
std::string MentionKey(std::string_view surface);

// Union of per-chunk mentions in chunk order, first occurrence kept.
std::vector<InstrumentMention> DedupMentions(
    const std::vector<std::vector<InstrumentMention>>& per_chunk);

// Runs the named-entity prompt chain for documents. Thread-safe as long as
// the gateway is; one instance may serve concurrent documents.
class ExtractionChain {
 public:
  ExtractionChain(Gateway& gateway, PromptTemplates templates,
                  ChainConfig config, ChainOptions options = {});

  // One structured request per chunk. Chunks whose response still violates
  // the schema after repairs contribute no mentions and a warning.
  std::vector<std::vector<InstrumentMention>> RunExtractionStep(
      std::string_view doc_id, const std::vector<TextChunk>& chunks,
      ChainTrace& trace) const;

  // One free-text request per chunk; outputs kept verbatim.
  std::vector<std::string> RunSummarizationStep(
      std::string_view doc_id, const std::vector<TextChunk>& chunks,
      ChainTrace& trace) const;

  // Single consolidating request over all step outputs. On schema failure
  // returns the deduplicated extraction union and flags the trace.
  std::vector<InstrumentMention> RunDecisionStep(
      std::string_view doc_id,
      const std::vector<std::vector<InstrumentMention>>& mentions,
      const std::vector<std::string>& summaries,
      const std::vector<TextChunk>& chunks, ChainTrace& trace) const;

  // Section detection, flattening, chunking, then the enabled steps.
  ChainResult Run(const ParsedDocument& doc, const ChunkerConfig& chunk_config) const;

  const ChainConfig& config() const { return config_; }
  const PromptTemplates& templates() const { return templates_; }

 private:
  // Fatal gateway errors propagate; a schema violation is reported through
  // StepCall::status with no result.
  std::pair<StepCall, std::optional<CompletionResult>> Call(
      const PromptRequest& request, ChainStep step,
      std::optional<std::size_t> chunk) const;

  Gateway& gateway_;
  PromptTemplates templates_;
  ChainConfig config_;
  ChainOptions options_;
};

}  // namespace instrx

#endif  // INSTRX_EXTRACTION_CHAIN_H_
