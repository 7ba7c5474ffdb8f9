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

#include "instrx/orchestrator.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "instrx/doc_model.h"
#include "instrx/parallel.h"
#include "instrx/relation_extractor.h"

namespace instrx {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Error ConfigError(const std::string& message) {
  return Error(ErrorKind::kConfigError, "config: " + message);
}

void CheckKeys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

// Reads obj[key] into out when present; type mismatches are config errors.
template <typename T>
void Read(const json& obj, const char* key, const std::string& where, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw json::type_error::create(302, "not a boolean", nullptr);
    } else if constexpr (std::is_arithmetic_v<T>) {
      if (!it->is_number()) throw json::type_error::create(302, "not a number", nullptr);
      if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) {
          throw json::type_error::create(302, "not an integer", nullptr);
        }
        if constexpr (std::is_unsigned_v<T>) {
          if (it->is_number_integer() && it->get<std::int64_t>() < 0 &&
              !it->is_number_unsigned()) {
            throw json::type_error::create(302, "negative", nullptr);
          }
        }
      }
    }
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

std::vector<std::string> StepNames(const ChainConfig& c) {
  std::vector<std::string> out;
  for (ChainStep s : c.steps()) out.push_back(ChainStepName(s));
  return out;
}

std::string FileStem(const std::string& doc_id) {
  std::string out;
  for (char c : doc_id) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
                      c == '-';
    out.push_back(keep ? c : '_');
  }
  if (out.empty() || out[0] == '.') out.insert(out.begin(), '_');
  return out;
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoFailure, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::kIoFailure, "write failed: " + path.string());
}

json ReadJsonFile(const fs::path& path, ErrorKind kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(kind, path.string() + ": invalid JSON");
  return j;
}

InstrumentDictionary LoadDictionaryForRun(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw ConfigError("dictionary file not found: " + path.string());
  }
  try {
    return InstrumentDictionary::Load(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfigError, std::string("dictionary: ") + e.what());
  }
}

const char* StatusFor(ErrorKind kind) {
  switch (ExitCodeFor(kind)) {
    case kExitConfig:
      return "config_error";
    case kExitIngestion:
      return "ingestion_error";
    default:
      return "backend_error";
  }
}

int StatusExitCode(const std::string& status) {
  if (status == "backend_error") return kExitBackend;
  if (status == "ingestion_error") return kExitIngestion;
  if (status == "config_error") return kExitConfig;
  return kExitOk;
}

json StatusToJson(const DocumentStatus& d) {
  json j = {{"doc_id", d.doc_id},
            {"source", d.source},
            {"status", d.status},
            {"instruments", d.instruments},
            {"decision_degraded", d.decision_degraded},
            {"warnings", d.warnings},
            {"usage", d.usage}};
  if (!d.error.empty()) j["error"] = d.error;
  return j;
}

// Canonical instruments of one document plus where each was first seen.
json NormalizationEvent(const std::vector<CanonicalInstrument>& canon,
                        const std::vector<InstrumentMention>& mentions) {
  json items = json::array();
  for (const auto& c : canon) {
    std::optional<std::size_t> first;
    for (const auto& m : mentions) {
      if (std::find(c.surface_names.begin(), c.surface_names.end(), m.surface_name) ==
          c.surface_names.end()) {
        continue;
      }
      if (!first || m.chunk_index < *first) first = m.chunk_index;
    }
    json item = CanonicalToJson(c);
    item["first_chunk"] = first ? json(*first) : json(nullptr);
    items.push_back(std::move(item));
  }
  return {{"event", "normalization"}, {"instruments", items}};
}

struct LoadedDoc {
  fs::path path;
  std::optional<ParsedDocument> doc;
  DocumentStatus status;
};

struct PipelineParts {
  const RunConfig& config;
  const InstrumentDictionary& dict;
  const ExtractionChain& chain;
  const RelationExtractor& relations;
  fs::path output_dir;
};

void ProcessDocument(const PipelineParts& parts, const ParsedDocument& doc,
                     DocumentStatus& status) {
  ChainResult chain = parts.chain.Run(doc, parts.config.chunker);
  const std::vector<CanonicalInstrument> canon =
      Normalize(std::span<const InstrumentMention>(chain.mentions), parts.dict,
                parts.config.normalizer);
  RelationOutcome rel = parts.relations.Extract(doc.doc_id, canon, chain.chunks);

  UsageStats usage = chain.usage;
  usage += rel.usage;

  std::string trace;
  for (const json& line : chain.trace.ToJsonLines()) trace += line.dump() + "\n";
  trace += NormalizationEvent(canon, chain.mentions).dump() + "\n";
  for (const json& line : rel.ToJsonLines()) trace += line.dump() + "\n";
  trace += json({{"event", "usage"}, {"usage", usage}}).dump() + "\n";

  const std::string stem = FileStem(doc.doc_id);
  WriteFile(parts.output_dir / (stem + ".records.json"),
            RecordsToJson(doc.doc_id, rel.records).dump(2) + "\n");
  WriteFile(parts.output_dir / (stem + ".trace.jsonl"), trace);

  status.status = "ok";
  status.instruments = rel.records.size();
  status.decision_degraded = chain.trace.decision_degraded;
  status.warnings = chain.trace.warnings.size() + rel.warnings.size();
  status.usage = usage;
}

std::string CellSlug(std::size_t index, const std::string& label) {
  std::string out;
  for (char c : label) {
    if (c == '+') {
      out.push_back('-');
    } else if (c == '/') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  char prefix[16];
  std::snprintf(prefix, sizeof(prefix), "%02zu-", index + 1);
  return prefix + FileStem(out);
}

void ReportError(std::ostream& log, const Error& e) {
  log << "error [" << ErrorKindName(e.kind()) << "]: " << e.what() << "\n";
}

}  // namespace

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfigError:
    case ErrorKind::kMismatchedCorpora:
      return kExitConfig;
    case ErrorKind::kMalformedInput:
    case ErrorKind::kIoFailure:
    case ErrorKind::kSpanOutOfRange:
      return kExitIngestion;
    case ErrorKind::kBackendUnavailable:
    case ErrorKind::kRateLimited:
    case ErrorKind::kSchemaViolation:
    case ErrorKind::kTranscriptMiss:
      return kExitBackend;
  }
  return kExitBackend;
}

const char* BackendModeName(BackendMode mode) {
  switch (mode) {
    case BackendMode::kMock:
      return "mock";
    case BackendMode::kLive:
      return "live";
    case BackendMode::kRecord:
      return "record";
  }
  return "mock";
}

// ---------------------------------------------------------------------------
// RunConfig

fs::path RunConfig::Resolve(const std::string& path) const {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.lexically_normal();
  return (base_dir / p).lexically_normal();
}

void RunConfig::Validate() const {
  if (input_dir.empty()) throw ConfigError("input_dir is required");
  if (dictionary.empty()) throw ConfigError("dictionary is required");
  if (templates.empty()) throw ConfigError("templates is required");
  if (output_dir.empty()) throw ConfigError("output_dir is required");
  if (concurrency < 1) throw ConfigError("concurrency must be at least 1");
  if (max_output_tokens < 1) throw ConfigError("max_output_tokens must be positive");
  if (normalizer.fuzzy_threshold <= 0.0 || normalizer.fuzzy_threshold > 1.0) {
    throw ConfigError("normalizer.fuzzy_threshold must be in (0, 1]");
  }
  if (retry.transport_retries < 0 || retry.repair_retries < 0 || retry.backoff_base_ms < 0 ||
      retry.backoff_max_ms < 0) {
    throw ConfigError("gateway retry settings must be non-negative");
  }
  if (backend.mode != BackendMode::kLive && backend.transcript.empty()) {
    throw ConfigError(std::string("backend.transcript is required in ") +
                      BackendModeName(backend.mode) + " mode");
  }
  if (backend.mode != BackendMode::kMock && backend.live.api_key_env.empty()) {
    throw ConfigError("backend.live.api_key_env is required");
  }
  chain.Validate();
  chunker.Validate();
}

json RunConfig::ToJson() const {
  return {
      {"input_dir", input_dir},
      {"dictionary", dictionary},
      {"templates", templates},
      {"chain",
       {{"steps", StepNames(chain)},
        {"input_mode", InputModeName(chain.input_mode)},
        {"template_set", chain.prompt_template_set}}},
      {"chunker", {{"chunk_budget", chunker.chunk_budget}, {"overlap", chunker.overlap}}},
      {"backend",
       {{"mode", BackendModeName(backend.mode)},
        {"transcript", backend.transcript},
        {"requests_per_minute", backend.requests_per_minute},
        {"live",
         {{"base_url", backend.live.base_url},
          {"model", backend.live.model},
          {"api_key_env", backend.live.api_key_env},
          {"connect_timeout_ms", backend.live.connect_timeout_ms},
          {"read_timeout_ms", backend.live.read_timeout_ms},
          {"json_response_format", backend.live.json_response_format}}}}},
      {"gateway",
       {{"transport_retries", retry.transport_retries},
        {"repair_retries", retry.repair_retries},
        {"backoff_base_ms", retry.backoff_base_ms},
        {"backoff_max_ms", retry.backoff_max_ms}}},
      {"normalizer",
       {{"fuzzy_threshold", normalizer.fuzzy_threshold},
        {"collapse_subtests", normalizer.collapse_subtests}}},
      {"detector", {{"methods", keywords.methods}, {"results", keywords.results}}},
      {"concurrency", concurrency},
      {"seed", seed},
      {"fail_fast", fail_fast},
      {"max_output_tokens", max_output_tokens}};
}

std::string RunConfig::Digest() const { return Sha256Hex(ToJson().dump()); }

RunConfig RunConfig::FromJson(const json& j, fs::path base_dir) {
  CheckKeys(j,
            {"input_dir", "dictionary", "templates", "output_dir", "chain", "chunker", "backend",
             "gateway", "normalizer", "detector", "concurrency", "seed", "fail_fast",
             "max_output_tokens"},
            "config");
  RunConfig c;
  c.base_dir = std::move(base_dir);
  Read(j, "input_dir", "config", c.input_dir);
  Read(j, "dictionary", "config", c.dictionary);
  Read(j, "templates", "config", c.templates);
  Read(j, "output_dir", "config", c.output_dir);
  Read(j, "concurrency", "config", c.concurrency);
  Read(j, "seed", "config", c.seed);
  Read(j, "fail_fast", "config", c.fail_fast);
  Read(j, "max_output_tokens", "config", c.max_output_tokens);

  if (auto it = j.find("chain"); it != j.end()) {
    CheckKeys(*it, {"steps", "input_mode", "template_set"}, "chain");
    std::vector<std::string> steps = StepNames(c.chain);
    std::string mode = InputModeName(c.chain.input_mode);
    std::string set = c.chain.prompt_template_set;
    Read(*it, "steps", "chain", steps);
    Read(*it, "input_mode", "chain", mode);
    Read(*it, "template_set", "chain", set);
    const auto parsed_mode = ParseInputMode(mode);
    if (!parsed_mode) throw ConfigError("unknown chain.input_mode \"" + mode + "\"");
    c.chain = ChainConfig::FromStepNames(steps, *parsed_mode);
    c.chain.prompt_template_set = set;
  }
  if (auto it = j.find("chunker"); it != j.end()) {
    CheckKeys(*it, {"chunk_budget", "overlap"}, "chunker");
    Read(*it, "chunk_budget", "chunker", c.chunker.chunk_budget);
    Read(*it, "overlap", "chunker", c.chunker.overlap);
  }
  if (auto it = j.find("backend"); it != j.end()) {
    CheckKeys(*it, {"mode", "transcript", "requests_per_minute", "live"}, "backend");
    std::string mode = BackendModeName(c.backend.mode);
    Read(*it, "mode", "backend", mode);
    if (mode == "mock") {
      c.backend.mode = BackendMode::kMock;
    } else if (mode == "live") {
      c.backend.mode = BackendMode::kLive;
    } else if (mode == "record") {
      c.backend.mode = BackendMode::kRecord;
    } else {
      throw ConfigError("backend.mode must be one of mock, live, record");
    }
    Read(*it, "transcript", "backend", c.backend.transcript);
    Read(*it, "requests_per_minute", "backend", c.backend.requests_per_minute);
    if (auto live = it->find("live"); live != it->end()) {
      CheckKeys(*live,
                {"base_url", "model", "api_key_env", "connect_timeout_ms", "read_timeout_ms",
                 "json_response_format"},
                "backend.live");
      LiveBackendConfig& l = c.backend.live;
      Read(*live, "base_url", "backend.live", l.base_url);
      Read(*live, "model", "backend.live", l.model);
      Read(*live, "api_key_env", "backend.live", l.api_key_env);
      Read(*live, "connect_timeout_ms", "backend.live", l.connect_timeout_ms);
      Read(*live, "read_timeout_ms", "backend.live", l.read_timeout_ms);
      Read(*live, "json_response_format", "backend.live", l.json_response_format);
    }
  }
  if (auto it = j.find("gateway"); it != j.end()) {
    CheckKeys(*it, {"transport_retries", "repair_retries", "backoff_base_ms", "backoff_max_ms"},
              "gateway");
    Read(*it, "transport_retries", "gateway", c.retry.transport_retries);
    Read(*it, "repair_retries", "gateway", c.retry.repair_retries);
    Read(*it, "backoff_base_ms", "gateway", c.retry.backoff_base_ms);
    Read(*it, "backoff_max_ms", "gateway", c.retry.backoff_max_ms);
  }
  if (auto it = j.find("normalizer"); it != j.end()) {
    CheckKeys(*it, {"fuzzy_threshold", "collapse_subtests"}, "normalizer");
    Read(*it, "fuzzy_threshold", "normalizer", c.normalizer.fuzzy_threshold);
    Read(*it, "collapse_subtests", "normalizer", c.normalizer.collapse_subtests);
  }
  if (auto it = j.find("detector"); it != j.end()) {
    CheckKeys(*it, {"methods", "results"}, "detector");
    Read(*it, "methods", "detector", c.keywords.methods);
    Read(*it, "results", "detector", c.keywords.results);
  }
  return c;
}

RunConfig RunConfig::Load(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  std::ifstream in(path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + ": invalid JSON");
  fs::path base = fs::absolute(path).parent_path();
  return FromJson(j, base);
}

std::shared_ptr<Backend> MakeBackend(const RunConfig& config) {
  switch (config.backend.mode) {
    case BackendMode::kMock: {
      const fs::path path = config.Resolve(config.backend.transcript);
      if (!fs::is_regular_file(path)) {
        throw ConfigError("transcript file not found: " + path.string());
      }
      try {
        return TranscriptBackend::FromFile(path);
      } catch (const Error& e) {
        throw Error(ErrorKind::kConfigError, std::string("transcript: ") + e.what());
      }
    }
    case BackendMode::kLive:
      return std::make_shared<HttpChatBackend>(config.backend.live);
    case BackendMode::kRecord:
      return std::make_shared<RecordingBackend>(
          std::make_shared<HttpChatBackend>(config.backend.live));
  }
  throw ConfigError("no backend selected");
}

std::vector<fs::path> ListDocumentFiles(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("input directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

// ---------------------------------------------------------------------------
// extract / record

ExtractOutcome RunExtract(const RunConfig& config, std::ostream& log,
                          std::shared_ptr<Backend> backend) {
  config.Validate();
  const InstrumentDictionary dict = LoadDictionaryForRun(config.Resolve(config.dictionary));
  const PromptTemplates templates =
      PromptTemplates::Load(config.Resolve(config.templates), config.chain.prompt_template_set);
  const std::vector<fs::path> files = ListDocumentFiles(config.Resolve(config.input_dir));
  const bool owns_backend = backend == nullptr;
  if (owns_backend) backend = MakeBackend(config);

  const fs::path out_dir = config.Resolve(config.output_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) {
    throw ConfigError("cannot create output directory " + out_dir.string());
  }

  Gateway gateway(backend, config.retry, config.backend.requests_per_minute, config.seed);
  ChainOptions chain_options;
  chain_options.max_concurrency = config.concurrency;
  chain_options.max_output_tokens = config.max_output_tokens;
  chain_options.keywords = config.keywords;
  const ExtractionChain chain(gateway, templates, config.chain, chain_options);
  RelationOptions rel_options;
  rel_options.max_concurrency = config.concurrency;
  rel_options.max_output_tokens = config.max_output_tokens;
  const RelationExtractor relations(gateway, templates, &dict, rel_options);
  const PipelineParts parts{config, dict, chain, relations, out_dir};

  std::vector<LoadedDoc> docs(files.size());
  std::set<std::string> seen_ids;
  for (std::size_t i = 0; i < files.size(); ++i) {
    LoadedDoc& d = docs[i];
    d.path = files[i];
    d.status.source = files[i].filename().string();
    d.status.doc_id = files[i].stem().string();
    try {
      d.doc = LoadDocument(files[i]);
      d.status.doc_id = d.doc->doc_id;
      if (!seen_ids.insert(d.doc->doc_id).second) {
        throw Error(ErrorKind::kMalformedInput,
                    d.status.source + ": duplicate doc_id " + d.doc->doc_id);
      }
    } catch (const Error& e) {
      d.doc.reset();
      d.status.status = StatusFor(e.kind());
      d.status.error = std::string(ErrorKindName(e.kind())) + ": " + e.what();
    }
  }

  std::atomic<bool> stop{false};
  if (config.fail_fast) {
    for (const auto& d : docs) {
      if (!d.doc) stop = true;
    }
  }
  ParallelFor(docs.size(), config.concurrency, [&](std::size_t i) {
    LoadedDoc& d = docs[i];
    if (!d.doc) return;
    if (stop) {
      d.status.status = "skipped";
      return;
    }
    try {
      ProcessDocument(parts, *d.doc, d.status);
    } catch (const GatewayError& e) {
      d.status.status = StatusFor(e.kind());
      d.status.error = std::string(ErrorKindName(e.kind())) + ": " + e.what();
      d.status.usage = e.usage();
      if (config.fail_fast) stop = true;
    } catch (const Error& e) {
      d.status.status = StatusFor(e.kind());
      d.status.error = std::string(ErrorKindName(e.kind())) + ": " + e.what();
      if (config.fail_fast) stop = true;
    }
  });

  ExtractOutcome outcome;
  json doc_list = json::array();
  std::size_t failed = 0;
  for (const auto& d : docs) {
    outcome.documents.push_back(d.status);
    outcome.usage += d.status.usage;
    doc_list.push_back(StatusToJson(d.status));
    outcome.exit_code = std::max(outcome.exit_code, StatusExitCode(d.status.status));
    if (d.status.status != "ok") {
      ++failed;
      log << d.status.source << ": " << d.status.status;
      if (!d.status.error.empty()) log << ": " << d.status.error;
      log << "\n";
    }
  }
  if (outcome.usage.backend_name.empty()) outcome.usage.backend_name = backend->name();

  outcome.manifest = {{"tool", "instrx"},
                      {"config", config.ToJson()},
                      {"config_digest", config.Digest()},
                      {"dictionary_version", dict.version()},
                      {"template_set", templates.Id()},
                      {"chain", config.chain.Label()},
                      {"backend", backend->name()},
                      {"documents", doc_list},
                      {"usage", outcome.usage},
                      {"failed_documents", failed},
                      {"status", failed == 0 ? "ok" : "partial"}};
  WriteFile(out_dir / "manifest.json", outcome.manifest.dump(2) + "\n");

  if (owns_backend && config.backend.mode == BackendMode::kRecord) {
    auto recorder = std::dynamic_pointer_cast<RecordingBackend>(backend);
    recorder->WriteTranscript(config.Resolve(config.backend.transcript));
  }
  log << "extracted " << (docs.size() - failed) << "/" << docs.size() << " documents into "
      << out_dir.string() << "\n";
  return outcome;
}

int CmdExtract(const RunConfig& config, std::ostream& log) {
  try {
    return RunExtract(config, log).exit_code;
  } catch (const Error& e) {
    ReportError(log, e);
    return ExitCodeFor(e.kind());
  }
}

int CmdRecord(RunConfig config, std::ostream& log) {
  config.backend.mode = BackendMode::kRecord;
  return CmdExtract(config, log);
}

// ---------------------------------------------------------------------------
// evaluate

DocPositions PositionsFromTrace(const fs::path& trace_path) {
  DocPositions positions;
  std::ifstream in(trace_path);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + trace_path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json event = json::parse(line, nullptr, false);
    if (event.is_discarded() || !event.is_object()) {
      throw Error(ErrorKind::kMalformedInput,
                  trace_path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
    }
    const std::string kind = event.value("event", std::string());
    if (kind == "chunks" && event.contains("chunks") && event["chunks"].is_array()) {
      positions.chunk_count = event["chunks"].size();
    } else if (kind == "normalization" && event.contains("instruments")) {
      for (const json& item : event["instruments"]) {
        if (!item.is_object() || !item.contains("canonical_name")) continue;
        const json& first = item.value("first_chunk", json(nullptr));
        if (!first.is_number_unsigned()) continue;
        positions.first_chunk[item["canonical_name"].get<std::string>()] =
            first.get<std::size_t>();
      }
    }
  }
  return positions;
}

EvalReport RunEvaluate(const EvaluateArgs& args) {
  if (!fs::is_directory(args.predictions_dir)) {
    throw ConfigError("predictions directory not found: " + args.predictions_dir.string());
  }
  if (!fs::is_regular_file(args.gold)) {
    throw ConfigError("gold file not found: " + args.gold.string());
  }
  const std::vector<GoldAnnotation> gold = LoadGold(args.gold);
  const InstrumentDictionary dict = LoadDictionaryForRun(args.dictionary);

  std::vector<fs::path> record_files;
  for (const auto& entry : fs::directory_iterator(args.predictions_dir)) {
    const std::string name = entry.path().filename().string();
    const std::string suffix = ".records.json";
    if (entry.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      record_files.push_back(entry.path());
    }
  }
  std::sort(record_files.begin(), record_files.end());

  std::map<std::string, std::vector<InstrumentRecord>> predicted;
  std::map<std::string, DocPositions> positions;
  for (const fs::path& path : record_files) {
    const json j = ReadJsonFile(path, ErrorKind::kMalformedInput);
    std::vector<InstrumentRecord> records;
    try {
      records = RecordsFromJson(j);
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ": " + e.what());
    }
    const std::string doc_id = j["doc_id"].get<std::string>();
    if (predicted.count(doc_id)) {
      throw Error(ErrorKind::kMalformedInput, path.string() + ": duplicate doc_id " + doc_id);
    }
    predicted[doc_id] = std::move(records);
    std::string trace_name = path.filename().string();
    trace_name.replace(trace_name.size() - std::string(".records.json").size(),
                       std::string::npos, ".trace.jsonl");
    const fs::path trace = path.parent_path() / trace_name;
    if (fs::is_regular_file(trace)) positions[doc_id] = PositionsFromTrace(trace);
  }

  UsageStats usage;
  std::string label = args.label;
  const fs::path manifest_path = args.predictions_dir / "manifest.json";
  if (fs::is_regular_file(manifest_path)) {
    const json manifest = ReadJsonFile(manifest_path, ErrorKind::kMalformedInput);
    try {
      if (manifest.contains("usage")) usage = manifest["usage"].get<UsageStats>();
      if (label.empty()) label = manifest.value("chain", std::string());
    } catch (const json::exception&) {
      throw Error(ErrorKind::kMalformedInput, manifest_path.string() + ": bad usage block");
    }
  }
  if (label.empty()) label = "predictions";

  EvalReport report = Evaluate(predicted, gold, dict, args.match, positions);
  report.label = label;
  report.usage = usage;
  return report;
}

namespace {

std::string ReportText(const EvalReport& report) {
  std::ostringstream out;
  out << RenderReportTable({{report.label, report.metrics.micro}});
  out << "\nmicro counts: TP=" << report.metrics.tp << " FP=" << report.metrics.fp
      << " FN=" << report.metrics.fn << "\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "mean gold/doc %.2f, mean predicted/doc %.2f\n",
                report.profile.mean_gold_per_doc, report.profile.mean_predicted_per_doc);
  out << buf;
  if (report.profile.over_extraction_factor) {
    std::snprintf(buf, sizeof(buf), "over-extraction factor on %zu single-instrument docs: %.2f\n",
                  report.profile.single_instrument_docs, *report.profile.over_extraction_factor);
    out << buf;
  }
  for (const auto& note : report.notes) out << "note: " << note << "\n";
  return out.str();
}

void WriteReport(const EvalReport& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  WriteFile(dir / "report.json", ReportToJson(report).dump(2) + "\n");
  WriteFile(dir / "report.txt", ReportText(report));
}

}  // namespace

int CmdEvaluate(const EvaluateArgs& args, std::ostream& log) {
  try {
    const EvalReport report = RunEvaluate(args);
    const fs::path out = args.output_dir.empty() ? args.predictions_dir : args.output_dir;
    WriteReport(report, out);
    log << ReportText(report);
    return kExitOk;
  } catch (const Error& e) {
    ReportError(log, e);
    return kExitConfig;
  }
}

// ---------------------------------------------------------------------------
// ablate

AblationGrid AblationGrid::FromJson(const json& j, const std::string& template_set) {
  CheckKeys(j, {"chains", "input_modes", "reference"}, "grid");
  if (!j.contains("chains") || !j["chains"].is_array() || j["chains"].empty()) {
    throw ConfigError("grid.chains must be a non-empty array of step lists");
  }
  std::vector<std::string> modes = {"method_excerpt"};
  Read(j, "input_modes", "grid", modes);
  if (modes.empty()) throw ConfigError("grid.input_modes must not be empty");
  AblationGrid grid;
  if (j.contains("reference")) {
    std::string ref;
    Read(j, "reference", "grid", ref);
    grid.reference = ref;
  }
  std::set<std::string> labels;
  for (std::size_t c = 0; c < j["chains"].size(); ++c) {
    std::vector<std::string> steps;
    try {
      steps = j["chains"][c].get<std::vector<std::string>>();
    } catch (const json::exception&) {
      throw ConfigError("grid.chains[" + std::to_string(c) + "] must be a list of step names");
    }
    for (const std::string& mode_name : modes) {
      const auto mode = ParseInputMode(mode_name);
      if (!mode) throw ConfigError("unknown input mode \"" + mode_name + "\" in grid");
      AblationCell cell;
      cell.chain = ChainConfig::FromStepNames(steps, *mode);
      cell.chain.prompt_template_set = template_set;
      cell.label = cell.chain.Label();
      try {
        cell.chain.Validate();
      } catch (const Error& e) {
        throw ConfigError("grid cell " + cell.label + ": " + e.what());
      }
      if (!labels.insert(cell.label).second) {
        throw ConfigError("grid cell " + cell.label + " appears twice");
      }
      grid.cells.push_back(std::move(cell));
    }
  }
  if (grid.reference && !labels.count(*grid.reference)) {
    throw ConfigError("grid.reference " + *grid.reference + " is not a cell label");
  }
  return grid;
}

AblationGrid AblationGrid::Load(const fs::path& path, const std::string& template_set) {
  if (!fs::is_regular_file(path)) throw ConfigError("grid file not found: " + path.string());
  std::ifstream in(path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path.string() + ": invalid JSON");
  return FromJson(j, template_set);
}

int CmdAblate(const RunConfig& config, const fs::path& grid_path, const fs::path& gold_path,
              std::ostream& log, std::shared_ptr<Backend> backend) {
  try {
    const AblationGrid grid = AblationGrid::Load(grid_path, config.chain.prompt_template_set);
    config.Validate();
    if (!fs::is_regular_file(gold_path)) {
      throw ConfigError("gold file not found: " + gold_path.string());
    }
    const bool owns_backend = backend == nullptr;
    if (owns_backend) backend = MakeBackend(config);

    const fs::path out_dir = config.Resolve(config.output_dir);
    std::vector<std::pair<std::string, EvalReport>> reports;
    for (std::size_t i = 0; i < grid.cells.size(); ++i) {
      const AblationCell& cell = grid.cells[i];
      RunConfig cell_config = config;
      cell_config.chain = cell.chain;
      const fs::path cell_dir = out_dir / "cells" / CellSlug(i, cell.label);
      cell_config.output_dir = cell_dir.string();
      log << "cell " << cell.label << "\n";
      const ExtractOutcome outcome = RunExtract(cell_config, log, backend);
      if (outcome.exit_code != kExitOk) return outcome.exit_code;

      EvaluateArgs eval;
      eval.predictions_dir = cell_dir;
      eval.gold = gold_path;
      eval.dictionary = config.Resolve(config.dictionary);
      eval.label = cell.label;
      eval.match = {config.normalizer.fuzzy_threshold, config.normalizer.collapse_subtests};
      EvalReport report = RunEvaluate(eval);
      WriteReport(report, cell_dir);
      reports.emplace_back(cell.label, std::move(report));
    }
    const Comparison comparison = CompareConfigs(reports, grid.reference);
    WriteFile(out_dir / "comparison.json", ComparisonToJson(comparison).dump(2) + "\n");
    const std::string table = RenderComparisonTable(comparison);
    WriteFile(out_dir / "comparison.txt", table);
    log << table;
    if (owns_backend && config.backend.mode == BackendMode::kRecord) {
      std::dynamic_pointer_cast<RecordingBackend>(backend)->WriteTranscript(
          config.Resolve(config.backend.transcript));
    }
    return kExitOk;
  } catch (const Error& e) {
    ReportError(log, e);
    return ExitCodeFor(e.kind());
  }
}

// ---------------------------------------------------------------------------
// validate-dict / detect

int CmdValidateDict(const fs::path& path, std::ostream& out) {
  try {
    const InstrumentDictionary dict = LoadDictionaryForRun(path);
    std::size_t aliases = 0;
    for (const auto& e : dict.entries()) aliases += e.aliases.size();
    out << "ok: " << path.string() << " version " << dict.version() << ", "
        << dict.entries().size() << " entries, " << aliases << " aliases\n";
    return kExitOk;
  } catch (const Error& e) {
    ReportError(out, e);
    return kExitConfig;
  }
}

int CmdDetect(const RunConfig& config, const std::optional<fs::path>& labels,
              std::ostream& out, std::ostream& log) {
  try {
    if (config.input_dir.empty()) throw ConfigError("input_dir is required");
    json expected = json::object();
    if (labels) {
      expected = ReadJsonFile(*labels, ErrorKind::kConfigError);
      if (!expected.is_object()) throw ConfigError("labels file must be a JSON object");
    }
    int exit_code = kExitOk;
    std::size_t labeled = 0;
    std::size_t correct = 0;
    for (const fs::path& file : ListDocumentFiles(config.Resolve(config.input_dir))) {
      ParsedDocument doc;
      try {
        doc = LoadDocument(file);
      } catch (const Error& e) {
        log << file.filename().string() << ": ";
        ReportError(log, e);
        exit_code = kExitIngestion;
        continue;
      }
      const SectionSpan span = DetectMethodSpan(doc, config.keywords);
      json line = {{"doc_id", doc.doc_id}, {"span", SectionSpanToJson(span)}};
      if (auto it = expected.find(doc.doc_id); it != expected.end()) {
        ++labeled;
        bool ok = it->value("start_page", -1) == span.start_page &&
                  it->value("end_page", -1) == span.end_page;
        if (it->contains("mode")) {
          ok = ok && (*it)["mode"] == DetectionModeName(span.mode);
        }
        if (ok) ++correct;
        line["correct"] = ok;
      }
      out << line.dump() << "\n";
    }
    if (labeled > 0) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "span accuracy: %.4f (%zu/%zu)\n",
                    static_cast<double>(correct) / static_cast<double>(labeled), correct,
                    labeled);
      log << buf;
    }
    return exit_code;
  } catch (const Error& e) {
    ReportError(log, e);
    return ExitCodeFor(e.kind());
  }
}

}  // namespace instrx
