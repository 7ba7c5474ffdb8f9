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

#ifndef INSTRX_ORCHESTRATOR_H_
#define INSTRX_ORCHESTRATOR_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instrx/chunker.h"
#include "instrx/error.h"
#include "instrx/evaluator.h"
#include "instrx/extraction_chain.h"
#include "instrx/llm_gateway.h"
#include "instrx/normalizer.h"
#include "instrx/section_detector.h"
#include "instrx/usage.h"

namespace instrx {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIngestion = 3;
inline constexpr int kExitBackend = 4;

int ExitCodeFor(ErrorKind kind);

enum class BackendMode { kMock, kLive, kRecord };

const char* BackendModeName(BackendMode mode);

struct BackendSettings {
  BackendMode mode = BackendMode::kMock;
  std::string transcript;  // replay source (mock) or destination (record)
  double requests_per_minute = 0;
  LiveBackendConfig live;
};

// Paths are kept as written and resolved against `base_dir` (the directory
// of the config file, or the working directory for flag overrides).
struct RunConfig {
  std::string input_dir;
  std::string dictionary;
  std::string templates = "templates";
  std::string output_dir = "out";
  ChainConfig chain;
  ChunkerConfig chunker;
  BackendSettings backend;
  RetryPolicy retry;
  NormalizerOptions normalizer;
  SectionKeywords keywords;
  std::size_t concurrency = 4;
  std::uint64_t seed = 0;
  bool fail_fast = false;
  std::int64_t max_output_tokens = 2048;

  std::filesystem::path base_dir;

  std::filesystem::path Resolve(const std::string& path) const;

  // Throws Error(kConfigError).
  void Validate() const;

  // Everything that determines pipeline output. The output directory and
  // base directory are left out so moved or repeated runs compare equal.
  nlohmann::json ToJson() const;
  std::string Digest() const;

  // Unknown keys are rejected. Throws Error(kConfigError).
  static RunConfig FromJson(const nlohmann::json& j, std::filesystem::path base_dir);
  static RunConfig Load(const std::filesystem::path& path);
};

// Backend for the configured mode. Record mode wraps the live backend; the
// caller writes the transcript afterwards.
std::shared_ptr<Backend> MakeBackend(const RunConfig& config);

struct DocumentStatus {
  std::string doc_id;
  std::string source;  // file name inside the input directory
  std::string status;  // "ok", "ingestion_error", "backend_error", "skipped"
  std::string error;
  std::size_t instruments = 0;
  bool decision_degraded = false;
  std::size_t warnings = 0;
  UsageStats usage;
};

struct ExtractOutcome {
  std::vector<DocumentStatus> documents;  // sorted by source file name
  UsageStats usage;
  int exit_code = kExitOk;
  nlohmann::json manifest;
};

// Runs detect, chunk, chain, normalize and relation extraction over every
// *.json file in the input directory and writes <doc_id>.records.json,
// <doc_id>.trace.jsonl and manifest.json to the output directory. Per-doc
// failures are recorded and skipped unless fail_fast is set. A non-null
// `backend` replaces the configured one. Config problems throw
// Error(kConfigError).
ExtractOutcome RunExtract(const RunConfig& config, std::ostream& log,
                          std::shared_ptr<Backend> backend = nullptr);

int CmdExtract(const RunConfig& config, std::ostream& log);

// Like CmdExtract with the backend forced to record mode.
int CmdRecord(RunConfig config, std::ostream& log);

struct EvaluateArgs {
  std::filesystem::path predictions_dir;
  std::filesystem::path gold;
  std::filesystem::path dictionary;
  std::filesystem::path output_dir;  // defaults to predictions_dir
  std::string label;                 // defaults to the manifest chain label
  MatchOptions match;
};

// Reads *.records.json (plus traces and manifest when present) and scores
// them. Throws Error on malformed inputs.
EvalReport RunEvaluate(const EvaluateArgs& args);

// Writes report.json and report.txt. Poor scores still exit 0; malformed
// inputs exit 2.
int CmdEvaluate(const EvaluateArgs& args, std::ostream& log);

struct AblationCell {
  ChainConfig chain;
  std::string label;
};

// Grid file: {"chains": [["ex"], ["ex", "sum", "dec"], ...],
// "input_modes": ["method_excerpt", "full_text"], "reference": label?}.
// Cells are the cross product, chains outermost. Throws Error(kConfigError)
// for an invalid cell.
struct AblationGrid {
  std::vector<AblationCell> cells;
  std::optional<std::string> reference;

  static AblationGrid FromJson(const nlohmann::json& j, const std::string& template_set);
  static AblationGrid Load(const std::filesystem::path& path, const std::string& template_set);
};

// One extract and evaluate per cell under <output_dir>/cells/<n>-<slug>,
// then comparison.json and comparison.txt in the output directory.
int CmdAblate(const RunConfig& config, const std::filesystem::path& grid_path,
              const std::filesystem::path& gold_path, std::ostream& log,
              std::shared_ptr<Backend> backend = nullptr);

int CmdValidateDict(const std::filesystem::path& path, std::ostream& out);

// Prints one JSON line per document with its detected span. With a labels
// file ({doc_id: {"start_page", "end_page", "mode"}}) also prints the span
// accuracy.
int CmdDetect(const RunConfig& config, const std::optional<std::filesystem::path>& labels,
              std::ostream& out, std::ostream& log);

// Sorted *.json files of a directory. Throws Error(kConfigError) if it does
// not exist.
std::vector<std::filesystem::path> ListDocumentFiles(const std::filesystem::path& dir);

// Positions of each canonical instrument's first mention, read back from a
// trace file.
DocPositions PositionsFromTrace(const std::filesystem::path& trace_path);

}  // namespace instrx

#endif  // INSTRX_ORCHESTRATOR_H_
