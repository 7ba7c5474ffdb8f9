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

#include "instrx/evaluator.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "instrx/error.h"

namespace instrx {
namespace {

using nlohmann::json;

double SortedMean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double Ratio(std::int64_t num, std::int64_t den, bool* undefined) {
  if (den == 0) {
    *undefined = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

std::vector<std::string> NamesOf(const std::vector<CanonicalInstrument>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) out.push_back(item.canonical_name);
  return out;
}

double PairSimilarity(const CanonicalInstrument& p, const CanonicalInstrument& g) {
  if (p.canonical_name == g.canonical_name) return 1.0;
  std::vector<std::string> left;
  std::vector<std::string> right;
  auto collect = [](const CanonicalInstrument& c, std::vector<std::string>& out) {
    for (const auto& part : NormalizeKey(c.canonical_name).parts()) out.push_back(part);
    for (const auto& s : c.surface_names) {
      for (const auto& part : NormalizeKey(s).parts()) out.push_back(part);
    }
  };
  collect(p, left);
  collect(g, right);
  double best = 0.0;
  for (const auto& a : left) {
    for (const auto& b : right) best = std::max(best, FuzzyScore(a, b));
  }
  return best;
}

std::optional<std::vector<std::string>> OptionalList(const json& j, const char* key,
                                                     const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_array()) {
    throw Error(ErrorKind::kMalformedInput, where + "/" + key + " must be an array");
  }
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw Error(ErrorKind::kMalformedInput, where + "/" + key + " must hold strings");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

json RatesToJson(const Rates& r) {
  return {{"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"accuracy", r.accuracy},
          {"precision_undefined", r.precision_undefined},
          {"recall_undefined", r.recall_undefined},
          {"empty", r.empty}};
}

json OptionalNumber(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string Pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::vector<GoldAnnotation> ParseGold(const json& j) {
  if (!j.is_array()) throw Error(ErrorKind::kMalformedInput, "gold file must be a JSON array");
  std::vector<GoldAnnotation> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "/" + std::to_string(i);
    const json& node = j[i];
    if (!node.is_object() || !node.contains("doc_id") || !node["doc_id"].is_string() ||
        node["doc_id"].get<std::string>().empty()) {
      throw Error(ErrorKind::kMalformedInput, where + ": needs a non-empty \"doc_id\"");
    }
    GoldAnnotation ann;
    ann.doc_id = node["doc_id"].get<std::string>();
    if (!seen.insert(ann.doc_id).second) {
      throw Error(ErrorKind::kMalformedInput, where + ": duplicate doc_id " + ann.doc_id);
    }
    if (!node.contains("instruments") || !node["instruments"].is_array()) {
      throw Error(ErrorKind::kMalformedInput, where + ": needs an \"instruments\" array");
    }
    const json& list = node["instruments"];
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string iw = where + "/instruments/" + std::to_string(k);
      const json& item = list[k];
      if (!item.is_object() || !item.contains("name") || !item["name"].is_string() ||
          item["name"].get<std::string>().empty()) {
        throw Error(ErrorKind::kMalformedInput, iw + ": needs a non-empty \"name\"");
      }
      GoldInstrument gi;
      gi.name = item["name"].get<std::string>();
      if (item.contains("type") && item["type"].is_string()) {
        gi.type = item["type"].get<std::string>();
      }
      gi.respondents = OptionalList(item, "respondents", iw);
      gi.constructs = OptionalList(item, "constructs", iw);
      gi.outcomes = OptionalList(item, "outcomes", iw);
      ann.instruments.push_back(std::move(gi));
    }
    out.push_back(std::move(ann));
  }
  return out;
}

std::vector<GoldAnnotation> LoadGold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open gold file " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorKind::kMalformedInput, path.string() + ": invalid JSON");
  }
  try {
    return ParseGold(j);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + e.what());
  }
}

// ---------------------------------------------------------------------------

MatchResult MatchEntities(const std::vector<CanonicalInstrument>& predicted,
                          const std::vector<std::string>& gold,
                          const InstrumentDictionary& dict, const MatchOptions& options) {
  return MatchEntities(NamesOf(predicted), gold, dict, options);
}

MatchResult MatchEntities(const std::vector<std::string>& predicted_names,
                          const std::vector<std::string>& gold_names,
                          const InstrumentDictionary& dict, const MatchOptions& options) {
  const NormalizerOptions norm{options.fuzzy_threshold, options.collapse_subtests};
  const std::vector<CanonicalInstrument> pred = Normalize(predicted_names, dict, norm);
  const std::vector<CanonicalInstrument> gold = Normalize(gold_names, dict, norm);

  struct Edge {
    std::size_t p;
    std::size_t g;
    double similarity;
  };
  std::vector<Edge> edges;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gold.size(); ++g) {
      const double s = PairSimilarity(pred[p], gold[g]);
      if (s >= options.fuzzy_threshold || s == 1.0) edges.push_back({p, g, s});
    }
  }
  auto gold_label = [&](std::size_t g) -> const std::string& {
    return gold[g].surface_names.front();
  };
  std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (gold_label(a.g) != gold_label(b.g)) return gold_label(a.g) < gold_label(b.g);
    return pred[a.p].canonical_name < pred[b.p].canonical_name;
  });

  constexpr std::size_t kFree = static_cast<std::size_t>(-1);
  std::vector<std::size_t> match_p(pred.size(), kFree);
  std::vector<std::size_t> match_g(gold.size(), kFree);
  std::vector<std::vector<const Edge*>> adjacency(pred.size());
  for (const Edge& e : edges) {
    adjacency[e.p].push_back(&e);
    if (match_p[e.p] == kFree && match_g[e.g] == kFree) {
      match_p[e.p] = e.g;
      match_g[e.g] = e.p;
    }
  }

  // Complete the greedy matching with augmenting paths.
  std::vector<bool> visited;
  std::function<bool(std::size_t)> augment = [&](std::size_t p) {
    for (const Edge* e : adjacency[p]) {
      if (visited[e->g]) continue;
      visited[e->g] = true;
      if (match_g[e->g] == kFree || augment(match_g[e->g])) {
        match_p[p] = e->g;
        match_g[e->g] = p;
        return true;
      }
    }
    return false;
  };
  for (bool grew = true; grew;) {
    grew = false;
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (match_p[p] != kFree) continue;
      visited.assign(gold.size(), false);
      grew = augment(p) || grew;
    }
  }

  MatchResult r;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    if (match_p[p] == kFree) {
      r.unmatched_predicted.push_back(pred[p].canonical_name);
      continue;
    }
    const std::size_t g = match_p[p];
    r.pairs.push_back({pred[p].canonical_name, gold_label(g), PairSimilarity(pred[p], gold[g])});
  }
  for (std::size_t g = 0; g < gold.size(); ++g) {
    if (match_g[g] == kFree) r.unmatched_gold.push_back(gold_label(g));
  }
  r.tp = static_cast<std::int64_t>(r.pairs.size());
  r.fp = static_cast<std::int64_t>(r.unmatched_predicted.size());
  r.fn = static_cast<std::int64_t>(r.unmatched_gold.size());
  return r;
}

// ---------------------------------------------------------------------------

double HarmonicMean(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

Rates RatesFromCounts(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  Rates r;
  r.precision = Ratio(tp, tp + fp, &r.precision_undefined);
  r.recall = Ratio(tp, tp + fn, &r.recall_undefined);
  r.f1 = HarmonicMean(r.precision, r.recall);
  bool accuracy_undefined = false;
  r.accuracy = Ratio(tp, tp + fp + fn, &accuracy_undefined);
  r.empty = accuracy_undefined;
  return r;
}

CoreMetrics ComputeMetrics(const std::vector<MatchResult>& results) {
  CoreMetrics m;
  std::vector<double> p, r, f, a;
  for (const MatchResult& doc : results) {
    m.tp += doc.tp;
    m.fp += doc.fp;
    m.fn += doc.fn;
    const Rates rates = RatesFromCounts(doc.tp, doc.fp, doc.fn);
    if (rates.empty) ++m.empty_docs;
    p.push_back(rates.precision);
    r.push_back(rates.recall);
    f.push_back(rates.f1);
    a.push_back(rates.accuracy);
  }
  m.micro = RatesFromCounts(m.tp, m.fp, m.fn);
  m.macro.precision = SortedMean(p);
  m.macro.recall = SortedMean(r);
  m.macro.f1 = SortedMean(f);
  m.macro.accuracy = SortedMean(a);
  m.macro.empty = results.empty() || m.empty_docs == results.size();
  m.macro.precision_undefined = m.micro.precision_undefined;
  m.macro.recall_undefined = m.micro.recall_undefined;
  return m;
}

ErrorProfile ComputeErrorProfile(const std::vector<MatchResult>& results,
                                 const std::map<std::string, DocCounts>& counts,
                                 const std::map<std::string, DocPositions>& positions) {
  ErrorProfile profile;
  std::vector<double> gold_counts, predicted_counts, single_ratios, relative;
  for (const MatchResult& doc : results) {
    DocCounts c{static_cast<std::size_t>(doc.tp + doc.fn),
                static_cast<std::size_t>(doc.tp + doc.fp)};
    if (auto it = counts.find(doc.doc_id); it != counts.end()) c = it->second;
    gold_counts.push_back(static_cast<double>(c.gold));
    predicted_counts.push_back(static_cast<double>(c.predicted));
    if (c.gold == 1) {
      ++profile.single_instrument_docs;
      single_ratios.push_back(static_cast<double>(c.predicted));
    }
    auto pos = positions.find(doc.doc_id);
    if (pos == positions.end()) continue;
    for (const MatchPair& pair : doc.pairs) {
      auto first = pos->second.first_chunk.find(pair.predicted);
      if (first == pos->second.first_chunk.end()) continue;
      ++profile.first_match_chunk[first->second];
      if (pos->second.chunk_count > 0) {
        relative.push_back(static_cast<double>(first->second) /
                           static_cast<double>(pos->second.chunk_count));
      }
    }
  }
  profile.mean_gold_per_doc = SortedMean(gold_counts);
  profile.mean_predicted_per_doc = SortedMean(predicted_counts);
  if (!single_ratios.empty()) profile.over_extraction_factor = SortedMean(single_ratios);
  if (!relative.empty()) profile.mean_relative_position = SortedMean(relative);
  return profile;
}

double TokenJaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  auto words = [](const std::vector<std::string>& items) {
    std::set<std::string> out;
    for (const auto& item : items) {
      for (const auto& part : NormalizeKey(item).parts()) {
        std::istringstream in(part);
        std::string w;
        while (in >> w) out.insert(w);
      }
    }
    return out;
  };
  const auto wa = words(a);
  const auto wb = words(b);
  if (wa.empty() && wb.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& w : wa) common += wb.count(w);
  return static_cast<double>(common) / static_cast<double>(wa.size() + wb.size() - common);
}

FieldAgreement ComputeFieldAgreement(
    const std::vector<MatchResult>& results,
    const std::map<std::string, std::vector<InstrumentRecord>>& predicted,
    const std::vector<GoldAnnotation>& gold, const InstrumentDictionary& dict,
    const MatchOptions& options) {
  const NormalizerOptions norm{options.fuzzy_threshold, options.collapse_subtests};
  std::vector<double> type_hits, resp, cons, outc;
  FieldAgreement out;
  for (const MatchResult& doc : results) {
    auto pred_it = predicted.find(doc.doc_id);
    auto gold_it = std::find_if(gold.begin(), gold.end(),
                                [&](const GoldAnnotation& g) { return g.doc_id == doc.doc_id; });
    if (pred_it == predicted.end() || gold_it == gold.end()) continue;
    for (const MatchPair& pair : doc.pairs) {
      const InstrumentRecord* record = nullptr;
      for (const auto& r : pred_it->second) {
        const std::vector<std::string> one{r.canonical_name};
        if (Normalize(one, dict, norm).front().canonical_name == pair.predicted) {
          record = &r;
          break;
        }
      }
      const GoldInstrument* g = nullptr;
      for (const auto& gi : gold_it->instruments) {
        if (gi.name == pair.gold) {
          g = &gi;
          break;
        }
      }
      if (record == nullptr || g == nullptr) continue;
      ++out.pairs_scored;
      if (g->type) {
        const auto gold_type = TypeAliasMap(*g->type);
        type_hits.push_back(gold_type && *gold_type == record->instrument_type ? 1.0 : 0.0);
      }
      if (g->respondents) resp.push_back(TokenJaccard(record->respondents, *g->respondents));
      if (g->constructs) cons.push_back(TokenJaccard(record->constructs, *g->constructs));
      if (g->outcomes) outc.push_back(TokenJaccard(record->outcomes, *g->outcomes));
    }
  }
  auto mean_or_none = [](const std::vector<double>& v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    return SortedMean(v);
  };
  out.type_accuracy = mean_or_none(type_hits);
  out.respondents_jaccard = mean_or_none(resp);
  out.constructs_jaccard = mean_or_none(cons);
  out.outcomes_jaccard = mean_or_none(outc);
  return out;
}

EvalReport Evaluate(const std::map<std::string, std::vector<InstrumentRecord>>& predicted,
                    const std::vector<GoldAnnotation>& gold,
                    const InstrumentDictionary& dict, const MatchOptions& options,
                    const std::map<std::string, DocPositions>& positions) {
  EvalReport report;
  report.options = options;
  std::map<std::string, DocCounts> counts;
  std::vector<const GoldAnnotation*> ordered;
  for (const auto& g : gold) ordered.push_back(&g);
  std::sort(ordered.begin(), ordered.end(),
            [](const GoldAnnotation* a, const GoldAnnotation* b) { return a->doc_id < b->doc_id; });

  for (const GoldAnnotation* g : ordered) {
    std::vector<std::string> gold_names;
    for (const auto& gi : g->instruments) gold_names.push_back(gi.name);
    std::vector<std::string> pred_names;
    auto it = predicted.find(g->doc_id);
    if (it != predicted.end()) {
      for (const auto& r : it->second) pred_names.push_back(r.canonical_name);
    }
    MatchResult r = MatchEntities(pred_names, gold_names, dict, options);
    r.doc_id = g->doc_id;
    if (it == predicted.end()) {
      r.missing_prediction = true;
      report.notes.push_back("no prediction for gold document " + g->doc_id +
                             "; scored as all false negatives");
    }
    counts[g->doc_id] = {g->instruments.size(), static_cast<std::size_t>(r.tp + r.fp)};
    report.per_doc.push_back(std::move(r));
  }
  for (const auto& [doc_id, records] : predicted) {
    const bool in_gold = std::any_of(gold.begin(), gold.end(),
                                     [&](const GoldAnnotation& g) { return g.doc_id == doc_id; });
    if (!in_gold) report.notes.push_back("prediction for " + doc_id + " has no gold annotation; not scored");
  }
  report.metrics = ComputeMetrics(report.per_doc);
  report.profile = ComputeErrorProfile(report.per_doc, counts, positions);
  report.fields = ComputeFieldAgreement(report.per_doc, predicted, gold, dict, options);
  return report;
}

json ReportToJson(const EvalReport& report) {
  json per_doc = json::array();
  for (const MatchResult& r : report.per_doc) {
    json pairs = json::array();
    for (const auto& p : r.pairs) {
      pairs.push_back({{"predicted", p.predicted}, {"gold", p.gold}, {"similarity", p.similarity}});
    }
    per_doc.push_back({{"doc_id", r.doc_id},
                       {"tp", r.tp},
                       {"fp", r.fp},
                       {"fn", r.fn},
                       {"pairs", pairs},
                       {"unmatched_predicted", r.unmatched_predicted},
                       {"unmatched_gold", r.unmatched_gold},
                       {"missing_prediction", r.missing_prediction}});
  }
  json histogram = json::object();
  for (const auto& [chunk, n] : report.profile.first_match_chunk) {
    histogram[std::to_string(chunk)] = n;
  }
  const FieldAgreement& f = report.fields;
  return {
      {"label", report.label},
      {"matching_rule",
       "names normalized through the instrument dictionary (exact > alias > fuzzy); pairs "
       "are canonical-name equal or fuzzy key score >= threshold; one-to-one, greedy by "
       "similarity then completed to maximum cardinality"},
      {"options",
       {{"fuzzy_threshold", report.options.fuzzy_threshold},
        {"collapse_subtests", report.options.collapse_subtests}}},
      {"metrics",
       {{"tp", report.metrics.tp},
        {"fp", report.metrics.fp},
        {"fn", report.metrics.fn},
        {"micro", RatesToJson(report.metrics.micro)},
        {"macro", RatesToJson(report.metrics.macro)},
        {"empty_docs", report.metrics.empty_docs}}},
      {"error_profile",
       {{"mean_gold_per_doc", report.profile.mean_gold_per_doc},
        {"mean_predicted_per_doc", report.profile.mean_predicted_per_doc},
        {"single_instrument_docs", report.profile.single_instrument_docs},
        {"over_extraction_factor", OptionalNumber(report.profile.over_extraction_factor)},
        {"first_match_chunk", histogram},
        {"mean_relative_position", OptionalNumber(report.profile.mean_relative_position)}}},
      {"field_agreement",
       {{"experimental", true},
        {"pairs_scored", f.pairs_scored},
        {"type_accuracy", OptionalNumber(f.type_accuracy)},
        {"respondents_jaccard", OptionalNumber(f.respondents_jaccard)},
        {"constructs_jaccard", OptionalNumber(f.constructs_jaccard)},
        {"outcomes_jaccard", OptionalNumber(f.outcomes_jaccard)}}},
      {"usage", report.usage},
      {"per_doc", per_doc},
      {"notes", report.notes}};
}

std::string RenderReportTable(const std::vector<std::pair<std::string, Rates>>& rows) {
  std::size_t width = std::string("Configuration").size();
  for (const auto& [label, rates] : rows) width = std::max(width, label.size());
  std::ostringstream out;
  out << Pad("Configuration", width) << " | Accuracy | Precision | Recall | F1\n";
  out << std::string(width, '-') << "-+----------+-----------+--------+------\n";
  for (const auto& [label, r] : rows) {
    out << Pad(label, width) << " | " << Pad(Fixed(r.accuracy, 3), 8) << " | "
        << Pad(Fixed(r.precision, 3), 9) << " | " << Pad(Fixed(r.recall, 3), 6) << " | "
        << Fixed(r.f1, 3) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------

Comparison CompareConfigs(const std::vector<std::pair<std::string, EvalReport>>& reports,
                          std::optional<std::string> reference) {
  if (reports.empty()) throw Error(ErrorKind::kConfigError, "no reports to compare");
  auto doc_set = [](const EvalReport& r) {
    std::set<std::string> ids;
    for (const auto& d : r.per_doc) ids.insert(d.doc_id);
    return ids;
  };
  const auto first_docs = doc_set(reports.front().second);
  for (const auto& [label, report] : reports) {
    if (doc_set(report) != first_docs) {
      throw Error(ErrorKind::kMismatchedCorpora,
                  "report " + label + " covers a different document set than " +
                      reports.front().first);
    }
  }

  std::size_t ref = 0;
  if (reference) {
    auto it = std::find_if(reports.begin(), reports.end(),
                           [&](const auto& r) { return r.first == *reference; });
    if (it == reports.end()) {
      throw Error(ErrorKind::kConfigError, "unknown reference configuration " + *reference);
    }
    ref = static_cast<std::size_t>(it - reports.begin());
  } else {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (reports[i].first.find("full_text") != std::string::npos) {
        ref = i;
        break;
      }
    }
  }

  Comparison out;
  out.reference = reports[ref].first;
  const UsageStats& base = reports[ref].second.usage;
  auto reduction = [](std::int64_t reference_value,
                      std::int64_t value) -> std::optional<double> {
    if (reference_value == 0) return std::nullopt;
    return static_cast<double>(reference_value - value) /
           static_cast<double>(reference_value);
  };
  for (const auto& [label, report] : reports) {
    ComparisonRow row;
    row.label = label;
    row.micro = report.metrics.micro;
    row.usage = report.usage;
    if (reports.size() > 1) {
      row.total_token_reduction = reduction(base.total_tokens(), report.usage.total_tokens());
      row.input_token_reduction = reduction(base.input_tokens, report.usage.input_tokens);
      row.output_token_reduction = reduction(base.output_tokens, report.usage.output_tokens);
      row.wall_time_reduction = reduction(base.wall_time_ms, report.usage.wall_time_ms);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

json ComparisonToJson(const Comparison& comparison) {
  json rows = json::array();
  for (const auto& row : comparison.rows) {
    rows.push_back({{"label", row.label},
                    {"micro", RatesToJson(row.micro)},
                    {"usage", row.usage},
                    {"total_token_reduction", OptionalNumber(row.total_token_reduction)},
                    {"input_token_reduction", OptionalNumber(row.input_token_reduction)},
                    {"output_token_reduction", OptionalNumber(row.output_token_reduction)},
                    {"wall_time_reduction", OptionalNumber(row.wall_time_reduction)}});
  }
  return {{"reference", comparison.reference}, {"rows", rows}};
}

std::string RenderComparisonTable(const Comparison& comparison) {
  std::vector<std::pair<std::string, Rates>> rates;
  for (const auto& row : comparison.rows) rates.emplace_back(row.label, row.micro);
  std::ostringstream out;
  out << RenderReportTable(rates) << "\n";
  std::size_t width = std::string("Configuration").size();
  for (const auto& row : comparison.rows) width = std::max(width, row.label.size());
  out << Pad("Configuration", width)
      << " | Input tok | Output tok | Wall ms  | Token reduction | Time reduction\n";
  auto pct = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::string s = Fixed(*v * 100.0, 1);
    if (s == "-0.0") s = "0.0";
    return s + "%";
  };
  for (const auto& row : comparison.rows) {
    out << Pad(row.label, width) << " | " << Pad(std::to_string(row.usage.input_tokens), 9)
        << " | " << Pad(std::to_string(row.usage.output_tokens), 10) << " | "
        << Pad(std::to_string(row.usage.wall_time_ms), 8) << " | "
        << Pad(pct(row.total_token_reduction), 15) << " | " << pct(row.wall_time_reduction)
        << "\n";
  }
  out << "(reductions relative to " << comparison.reference << ")\n";
  return out.str();
}

}  // namespace instrx
