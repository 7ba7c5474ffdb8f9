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

#ifndef INSTRX_EVALUATOR_H_
#define INSTRX_EVALUATOR_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "instrx/normalizer.h"
#include "instrx/relation_extractor.h"
#include "instrx/usage.h"

namespace instrx {

struct GoldInstrument {
  std::string name;
  std::optional<std::string> type;
  std::optional<std::vector<std::string>> respondents;
  std::optional<std::vector<std::string>> constructs;
  std::optional<std::vector<std::string>> outcomes;
};

struct GoldAnnotation {
  std::string doc_id;
  std::vector<GoldInstrument> instruments;
};

// Gold file: a JSON array of {"doc_id": str, "instruments": [{"name": str,
// "type": str?, "respondents": [str]?, "constructs": [str]?,
// "outcomes": [str]?}]}. Throws Error(kMalformedInput) / Error(kIoFailure).
std::vector<GoldAnnotation> ParseGold(const nlohmann::json& j);
std::vector<GoldAnnotation> LoadGold(const std::filesystem::path& path);

struct MatchPair {
  std::string predicted;  // canonical name
  std::string gold;       // gold name as annotated
  double similarity = 0;

  bool operator==(const MatchPair&) const = default;
};

struct MatchResult {
  std::string doc_id;
  std::vector<MatchPair> pairs;
  std::vector<std::string> unmatched_predicted;
  std::vector<std::string> unmatched_gold;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  bool missing_prediction = false;  // gold doc with no prediction file
};

struct MatchOptions {
  double fuzzy_threshold = 0.90;
  bool collapse_subtests = false;
};

// Normalizes both sides through the dictionary, then pairs them one-to-one.
// Candidate pairs are canonical-name equality (similarity 1) or a fuzzy key
// score at or above the threshold. Pairs are taken greedily by descending
// similarity (ties: smaller gold name, then smaller predicted name); any
// augmenting path left afterwards is applied so the pair count is maximal.
MatchResult MatchEntities(const std::vector<CanonicalInstrument>& predicted,
                          const std::vector<std::string>& gold,
                          const InstrumentDictionary& dict,
                          const MatchOptions& options = {});
MatchResult MatchEntities(const std::vector<std::string>& predicted_names,
                          const std::vector<std::string>& gold,
                          const InstrumentDictionary& dict,
                          const MatchOptions& options = {});

struct Rates {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double accuracy = 0;  // TP / (TP + FP + FN)
  bool precision_undefined = false;  // 0/0, reported as 0
  bool recall_undefined = false;
  bool empty = false;  // TP = FP = FN = 0

  bool operator==(const Rates&) const = default;
};

double HarmonicMean(double precision, double recall);
Rates RatesFromCounts(std::int64_t tp, std::int64_t fp, std::int64_t fn);

struct CoreMetrics {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  Rates micro;
  Rates macro;              // mean of per-document rates
  std::size_t empty_docs = 0;

  bool operator==(const CoreMetrics&) const = default;
};

CoreMetrics ComputeMetrics(const std::vector<MatchResult>& results);

// Where in the chunk sequence each document's mentions came from.
struct DocPositions {
  std::map<std::string, std::size_t> first_chunk;  // canonical -> chunk index
  std::size_t chunk_count = 0;
};

struct DocCounts {
  std::size_t gold = 0;       // annotated instruments
  std::size_t predicted = 0;  // predicted canonical instruments
};

struct ErrorProfile {
  double mean_gold_per_doc = 0;
  double mean_predicted_per_doc = 0;
  std::size_t single_instrument_docs = 0;
  // Mean predicted/gold count ratio over docs with exactly one gold
  // instrument; absent when there are none.
  std::optional<double> over_extraction_factor;
  // chunk index of the first matching mention -> number of matched pairs.
  std::map<std::size_t, std::size_t> first_match_chunk;
  std::optional<double> mean_relative_position;  // index / chunk_count

  bool operator==(const ErrorProfile&) const = default;
};

ErrorProfile ComputeErrorProfile(const std::vector<MatchResult>& results,
                                 const std::map<std::string, DocCounts>& counts,
                                 const std::map<std::string, DocPositions>& positions);

// Soft agreement on relation fields over matched pairs. Experimental: lexical
// divergence between gold labels and defensible model output is common.
struct FieldAgreement {
  std::size_t pairs_scored = 0;
  std::optional<double> type_accuracy;
  std::optional<double> respondents_jaccard;
  std::optional<double> constructs_jaccard;
  std::optional<double> outcomes_jaccard;
};

// Jaccard index of the normalized word sets of two label lists; two empty
// lists score 1.
double TokenJaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

FieldAgreement ComputeFieldAgreement(
    const std::vector<MatchResult>& results,
    const std::map<std::string, std::vector<InstrumentRecord>>& predicted,
    const std::vector<GoldAnnotation>& gold, const InstrumentDictionary& dict,
    const MatchOptions& options);

struct EvalReport {
  std::string label;
  MatchOptions options;
  std::vector<MatchResult> per_doc;  // sorted by doc_id
  CoreMetrics metrics;
  ErrorProfile profile;
  FieldAgreement fields;
  UsageStats usage;
  std::vector<std::string> notes;
};

nlohmann::json ReportToJson(const EvalReport& report);

// Text table with the columns Configuration | Accuracy | Precision | Recall | F1.
std::string RenderReportTable(const std::vector<std::pair<std::string, Rates>>& rows);

// Scores predicted records against gold for every gold document.
EvalReport Evaluate(const std::map<std::string, std::vector<InstrumentRecord>>& predicted,
                    const std::vector<GoldAnnotation>& gold,
                    const InstrumentDictionary& dict, const MatchOptions& options,
                    const std::map<std::string, DocPositions>& positions = {});

struct ComparisonRow {
  std::string label;
  Rates micro;
  UsageStats usage;
  // (reference - row) / reference; absent for a single-row comparison or a
  // zero reference.
  std::optional<double> total_token_reduction;
  std::optional<double> input_token_reduction;
  std::optional<double> output_token_reduction;
  std::optional<double> wall_time_reduction;
};

struct Comparison {
  std::string reference;
  std::vector<ComparisonRow> rows;
};

// Rows keep the input order. The reference row is `reference` when given,
// otherwise the first label containing "full_text", otherwise the first row.
// Throws Error(kMismatchedCorpora) if doc sets differ, Error(kConfigError)
// for fewer than one report or an unknown reference.
Comparison CompareConfigs(const std::vector<std::pair<std::string, EvalReport>>& reports,
                          std::optional<std::string> reference = std::nullopt);

nlohmann::json ComparisonToJson(const Comparison& comparison);
std::string RenderComparisonTable(const Comparison& comparison);

}  // namespace instrx

#endif  // INSTRX_EVALUATOR_H_
