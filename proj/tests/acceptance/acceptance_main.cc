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


// Runs every acceptance criterion at its tolerance and time limit and prints
// one PASS/FAIL line per criterion. Exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "instrx/chunker.h"
#include "instrx/evaluator.h"
#include "instrx/extraction_chain.h"
#include "instrx/llm_gateway.h"
#include "instrx/normalizer.h"
#include "instrx/orchestrator.h"
#include "instrx/section_detector.h"
#include "support/generators.h"
#include "support/test_util.h"

namespace instrx {
namespace {

using nlohmann::json;
using testing::FixtureDir;
using testing::Gen;
using testing::ReadFile;

// Collects failed expectations for one criterion.
class Checker {
 public:
  void Expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  bool ok() const { return failed_ == 0; }
  std::string Summary() const {
    std::ostringstream out;
    if (ok()) {
      out << checks_ << " checks";
    } else {
      out << failed_ << "/" << checks_ << " checks failed";
      for (const auto& f : failures_) out << "\n      - " << f;
    }
    return out.str();
  }

 private:
  std::size_t checks_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

std::string Num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

struct PublishedRow {
  const char* model;
  double accuracy;
  double precision;
  double recall;
  double f1;
};

constexpr PublishedRow kPublished[] = {
    {"gpt-4o-mini", 0.472, 0.508, 0.901, 0.619},
    {"gpt-4o", 0.491, 0.514, 0.943, 0.665},
    {"gpt-o1", 0.641, 0.696, 0.904, 0.786},
    {"claude-sonnet", 0.615, 0.644, 0.929, 0.761},
    {"llama-3.3-70b", 0.396, 0.608, 0.639, 0.623},
};

// Micro counts implied by a precision/recall pair at a large TP scale.
MatchResult ImpliedCounts(double precision, double recall) {
  constexpr double kTp = 1e6;
  MatchResult r;
  r.doc_id = "implied";
  r.tp = static_cast<std::int64_t>(kTp);
  r.fp = std::llround(kTp * (1.0 - precision) / precision);
  r.fn = std::llround(kTp * (1.0 - recall) / recall);
  return r;
}

void MetricArithmetic(Checker& c) {
  for (const auto& row : kPublished) {
    const CoreMetrics m = ComputeMetrics({ImpliedCounts(row.precision, row.recall)});
    c.Expect(std::abs(m.micro.f1 - row.f1) <= 0.001,
             std::string(row.model) + ": F1 " + Num(m.micro.f1) + " vs published " + Num(row.f1, 3));
  }
}

void AccuracyConsistency(Checker& c) {
  for (const auto& row : kPublished) {
    const CoreMetrics m = ComputeMetrics({ImpliedCounts(row.precision, row.recall)});
    c.Expect(std::abs(m.micro.accuracy - row.accuracy) <= 0.01,
             std::string(row.model) + ": accuracy " + Num(m.micro.accuracy) + " vs published " +
                 Num(row.accuracy, 3));
  }
}

void TokenSavings(Checker& c) {
  auto report = [](std::int64_t in, std::int64_t out) {
    EvalReport r;
    for (const char* d : {"d1", "d2", "d3"}) {
      MatchResult m;
      m.doc_id = d;
      r.per_doc.push_back(m);
    }
    r.usage = {in, out, 0, "fixture"};
    return r;
  };
  const Comparison cmp = CompareConfigs(
      {{"Ex+Sum+Dec/method_excerpt", report(11248, 6730)}, {"Ex+Sum+Dec/full_text", report(26181, 20109)}});
  c.Expect(cmp.reference == "Ex+Sum+Dec/full_text", "reference row is " + cmp.reference);
  const auto& delta = cmp.rows[0].total_token_reduction;
  c.Expect(delta.has_value() && std::abs(*delta - 0.61) <= 0.01,
           "total-token reduction " + (delta ? Num(*delta) : std::string("absent")));
}

void DeterministicReplay(Checker& c) {
  std::vector<std::vector<std::pair<std::string, std::string>>> snapshots;
  for (int run = 0; run < 3; ++run) {
    testing::TempDir dir("acc-replay");
    RunConfig config = RunConfig::Load(FixtureDir() / "run_config.json");
    config.output_dir = dir.path().string();
    std::ostringstream log;
    const ExtractOutcome out = RunExtract(config, log);
    c.Expect(out.exit_code == 0, "run " + std::to_string(run) + " exit " + std::to_string(out.exit_code));
    c.Expect(out.documents.size() >= 5, "fewer than 5 documents");
    snapshots.push_back(testing::Snapshot(dir.path()));
    if (run == 0) {
      const json j = json::parse(ReadFile(dir / "table2_class.records.json"));
      const json expected = {{"name", "CLASS (Classroom Assessment Scoring System)"},
                             {"type", "Observation Protocol"},
                             {"respondents", {"Students", "Teachers"}},
                             {"constructs", {"Classroom Organization", "Preventive Discipline", "Time Management"}},
                             {"outcomes", {"Teacher Interaction"}}};
      c.Expect(j["instruments"].size() == 1, "observation fixture record count");
      if (!j["instruments"].empty()) {
        json got = j["instruments"][0];
        got.erase("evidence");
        c.Expect(got == expected, "observation record " + got.dump());
      }
    }
  }
  c.Expect(!snapshots[0].empty(), "no output files");
  c.Expect(snapshots[0] == snapshots[1] && snapshots[1] == snapshots[2], "outputs differ across runs");
}

void DetectorFloor(Checker& c) {
  const json labels = json::parse(ReadFile(FixtureDir() / "detection_labels.json"));
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& file : ListDocumentFiles(FixtureDir() / "detection")) {
    const ParsedDocument doc = LoadDocument(file);
    if (!labels.contains(doc.doc_id)) continue;
    const json& want = labels[doc.doc_id];
    const SectionSpan span = DetectMethodSpan(doc);
    ++total;
    correct += span.start_page == want["start_page"].get<int>() &&
               span.end_page == want["end_page"].get<int>() &&
               DetectionModeName(span.mode) == want["mode"].get<std::string>();
  }
  const double accuracy = total ? static_cast<double>(correct) / total : 0.0;
  c.Expect(total >= 25, "only " + std::to_string(total) + " labeled fixtures");
  c.Expect(accuracy >= 0.92, "span accuracy " + Num(accuracy) + " (" + std::to_string(correct) + "/" +
                                 std::to_string(total) + ")");
}

void ChunkerProperties(Checker& c) {
  Gen gen(2024);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::string text = testing::RandomProse(gen);
    const std::int64_t budget = 1 + static_cast<std::int64_t>(gen.Below(300));
    const std::int64_t overlap =
        iter % 2 == 0 ? 0 : static_cast<std::int64_t>(gen.Below(static_cast<std::size_t>(budget)));
    const ChunkerConfig config{budget, overlap};
    const auto chunks = ChunkText(text, {}, config);
    const auto again = ChunkText(text, {}, config);
    const std::string tag = "text " + std::to_string(iter);

    std::string fresh;
    std::string whole;
    bool same = chunks.size() == again.size();
    for (std::size_t k = 0; k < chunks.size(); ++k) {
      const TextChunk& ch = chunks[k];
      same = same && ch.text == again[k].text && ch.token_count == again[k].token_count;
      fresh += ch.text.substr(ch.overlap_length);
      whole += ch.text;
      if (!ch.oversized) {
        c.Expect(ch.token_count <= budget, tag + ": chunk over budget");
      } else {
        c.Expect(SplitSentences(ch.text.substr(ch.overlap_length)).size() == 1,
                 tag + ": oversized chunk is not a single sentence");
      }
      if (k) c.Expect(chunks[k - 1].source_offset < ch.source_offset, tag + ": order");
    }
    c.Expect(same, tag + ": nondeterministic");
    c.Expect(fresh == text, tag + ": fresh regions do not rebuild the input");
    if (overlap == 0) {
      std::string a = whole, b = text;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      c.Expect(a == b, tag + ": character multiset differs");
    }
    const std::string suffix = testing::RandomProse(gen);
    c.Expect(CountTokens(text + text) >= CountTokens(text), tag + ": count not monotone");
    c.Expect(CountTokens(text + suffix) >= CountTokens(text), tag + ": count not monotone on append");
  }
}

void MatchingOracle(Checker& c) {
  Gen gen(31337);
  const InstrumentDictionary empty;
  for (int iter = 0; iter < 500; ++iter) {
    const auto inst = testing::RandomMatchingInstance(gen);
    const MatchResult r = MatchEntities(inst.predicted, inst.gold, empty);
    const auto best = static_cast<std::int64_t>(testing::BruteForceMaxMatching(inst.edge));
    c.Expect(r.tp == best, "instance " + std::to_string(iter) + ": tp " + std::to_string(r.tp) +
                               " vs optimum " + std::to_string(best));
  }
}

void NormalizerProperties(Checker& c) {
  Gen gen(4242);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::string s = testing::RandomSurface(gen);
    const NormalizedKey k = NormalizeKey(s);
    c.Expect(NormalizeKey(k.key) == NormalizedKey{k.key, ""} &&
                 NormalizeKey(k.expansion) == NormalizedKey{k.expansion, ""},
             "normalize_key not idempotent on \"" + s + "\"");
  }
  for (int iter = 0; iter < 500; ++iter) {
    std::string base = testing::RandomWord(gen, 4 + gen.Below(10));
    if (gen.Chance(0.5)) base += " " + testing::RandomWord(gen, 3 + gen.Below(6));
    const std::string near = testing::Perturb(gen, base, 1 + gen.Below(2));
    const std::string a = NormalizeKey(near).key;
    const std::string b = NormalizeKey(base).key;
    const double longest = static_cast<double>(std::max(a.size(), b.size()));
    const double oracle = 1.0 - static_cast<double>(testing::NaiveLevenshtein(a, b)) / longest;
    c.Expect(std::abs(FuzzyScore(a, b) - oracle) < 1e-12, "fuzzy score for " + a + " / " + b);
  }
  for (int iter = 0; iter < 200; ++iter) {
    const std::string word = testing::RandomWord(gen, 8 + gen.Below(8));
    const std::string neighbour = testing::Perturb(gen, word, 1);
    if (neighbour == word) continue;
    std::vector<DictEntry> entries = {{neighbour, {}, {}, {}}, {word, {}, {}, {}}};
    if (gen.Chance(0.5)) std::swap(entries[0], entries[1]);
    const InstrumentDictionary dict("collision", entries);
    const SurfaceMatch m = MatchSurface(word, dict, 0.5);
    c.Expect(m.kind == MatchKind::kExact && m.canonical_name == word, "exact lost to fuzzy for " + word);
  }
  const auto dict = InstrumentDictionary::Load(FixtureDir() / "dictionary.json");
  const std::vector<std::string> pool = {"WJ-III", "Woodcock Johnson III", "WJ-III Math Fluency",
                                         "WJ-III Letter-Word subtest", "CLASS", "MBI", "AMAS",
                                         "Teacher Stress Diary", "Family Involvement Questionnaire"};
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<std::string> surfaces;
    const std::size_t n = gen.Below(7);
    for (std::size_t i = 0; i < n; ++i) surfaces.push_back(gen.Pick(pool));
    const auto once = Normalize(std::span<const std::string>(surfaces), dict, {0.9, true});
    c.Expect(CollapseSubtests(once, dict) == once, "collapse not idempotent");
  }
}

void DegradationPaths(Checker& c) {
  const RunConfig config = RunConfig::Load(FixtureDir() / "run_config.json");
  auto backend = TranscriptBackend::FromFile(config.Resolve(config.backend.transcript));
  Gateway gateway(backend, config.retry, 0, config.seed);
  ExtractionChain chain(gateway,
                        PromptTemplates::Load(config.Resolve(config.templates), config.chain.prompt_template_set),
                        config.chain, {config.concurrency, config.max_output_tokens, config.keywords});

  const ChainResult repaired =
      chain.Run(LoadDocument(config.Resolve(config.input_dir) / "math_anxiety.json"), config.chunker);
  c.Expect(!repaired.trace.calls.empty() && repaired.trace.calls[0].attempts == 2,
           "malformed-then-valid reply did not take 2 attempts");

  const ChainResult degraded =
      chain.Run(LoadDocument(config.Resolve(config.input_dir) / "family_engagement.json"), config.chunker);
  c.Expect(degraded.trace.decision_degraded, "decision failure not flagged");
  c.Expect(degraded.mentions == DedupMentions(degraded.trace.chunk_mentions),
           "decision failure did not fall back to the extraction union");

  testing::TempDir dir("acc-miss");
  std::istringstream in(ReadFile(config.Resolve(config.backend.transcript)));
  std::string line, kept;
  std::getline(in, line);  // drop one recorded exchange
  while (std::getline(in, line)) kept += line + "\n";
  testing::WriteText(dir / "t.jsonl", kept);
  RunConfig missing = config;
  missing.backend.transcript = (dir / "t.jsonl").string();
  missing.output_dir = (dir / "out").string();
  std::ostringstream log;
  const int code = CmdExtract(missing, log);
  c.Expect(code == kExitBackend, "transcript miss exit " + std::to_string(code));
  c.Expect(log.str().find("TranscriptMiss") != std::string::npos, "miss not reported");
}

void ErrorProfileArithmetic(Checker& c) {
  const InstrumentDictionary empty;
  std::vector<GoldAnnotation> gold;
  std::map<std::string, std::vector<InstrumentRecord>> predicted;
  for (int d = 0; d < 4; ++d) {
    const std::string id = "over" + std::to_string(d);
    gold.push_back({id, {{"Teacher Stress Inventory", {}, {}, {}, {}}}});
    auto& recs = predicted[id];
    recs.push_back({id, "Teacher Stress Inventory", InstrumentType::kSurveyQuestionnaire, {}, {}, {}, {}});
    for (const char* sub : {"Subscale Alpha", "Subscale Beta", "Subscale Gamma", "Subscale Delta",
                            "Subscale Epsilon"}) {
      recs.push_back({id, sub, InstrumentType::kOtherTool, {}, {}, {}, {}});
    }
  }
  const EvalReport over = Evaluate(predicted, gold, empty, {});
  c.Expect(over.profile.over_extraction_factor.has_value() &&
               std::abs(*over.profile.over_extraction_factor - 6.0) < 1e-12,
           "over-extraction factor " +
               (over.profile.over_extraction_factor ? Num(*over.profile.over_extraction_factor)
                                                    : std::string("absent")));

  // 50 documents, 33 with four instruments and 17 with three: 183 / 50.
  std::vector<GoldAnnotation> corpus;
  std::size_t total = 0;
  for (int d = 0; d < 50; ++d) {
    GoldAnnotation g{"doc" + std::to_string(d), {}};
    const int n = d < 33 ? 4 : 3;
    for (int k = 0; k < n; ++k) g.instruments.push_back({"instrument " + std::to_string(k), {}, {}, {}, {}});
    total += g.instruments.size();
    corpus.push_back(std::move(g));
  }
  const EvalReport mean = Evaluate({}, corpus, empty, {});
  c.Expect(total == 183, "fixture total " + std::to_string(total));
  c.Expect(std::abs(mean.profile.mean_gold_per_doc - 3.66) < 1e-9,
           "mean gold count " + Num(mean.profile.mean_gold_per_doc));
}

struct Criterion {
  int number;
  const char* name;
  double limit_ms;
  std::function<void(Checker&)> run;
};

}  // namespace
}  // namespace instrx

int main() {
  using namespace instrx;
  const std::vector<Criterion> criteria = {
      {1, "metric arithmetic", 1000, MetricArithmetic},
      {2, "accuracy consistency", 1000, AccuracyConsistency},
      {3, "token-savings arithmetic", 1000, TokenSavings},
      {4, "deterministic end-to-end replay", 30000, DeterministicReplay},
      {5, "section detector floor", 5000, DetectorFloor},
      {6, "chunker properties", 30000, ChunkerProperties},
      {7, "matching oracle equivalence", 30000, MatchingOracle},
      {8, "normalizer properties", 30000, NormalizerProperties},
      {9, "degradation paths", 10000, DegradationPaths},
      {10, "error-profile arithmetic", 5000, ErrorProfileArithmetic},
  };
  int failed = 0;
  for (const Criterion& cr : criteria) {
    Checker checker;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(checker);
    } catch (const std::exception& e) {
      checker.Expect(false, std::string("exception: ") + e.what());
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    checker.Expect(ms < cr.limit_ms, "runtime " + Num(ms, 0) + " ms over limit");
    const bool ok = checker.ok();
    failed += !ok;
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << cr.number << " (" << cr.name << "): "
              << checker.Summary() << " [" << Num(ms, 1) << " ms / limit " << Num(cr.limit_ms, 0)
              << " ms]\n";
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
