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


#include "instrx/normalizer.h"

#include <set>
#include <string>

#include <doctest.h>

#include "instrx/error.h"
#include "support/generators.h"
#include "support/test_util.h"

namespace instrx {
namespace {

using testing::FixtureDir;
using testing::Gen;

InstrumentDictionary Dict(std::vector<DictEntry> entries) {
  return InstrumentDictionary("test", std::move(entries));
}

std::string ParseError(const std::string& text) {
  try {
    InstrumentDictionary::Parse(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMalformedInput);
    return e.what();
  }
  return {};
}

TEST_SUITE("normalizer") {

TEST_CASE("normalize key examples") {
  const NormalizedKey k = NormalizeKey("CLASS (Classroom Assessment Scoring System)");
  CHECK(k.key == "class");
  CHECK(k.expansion == "classroom assessment scoring system");
  CHECK(NormalizeKey("Woodcock-Johnson III").key == "woodcock johnson iii");
  CHECK(NormalizeKey("  Échelle   d'Anxiété ").key == "echelle danxiete");
  CHECK(NormalizeKey("Teacher's  Report, v2.0").key == "teachers report v20");
  CHECK(NormalizeKey("(MBI)").key.empty());
  CHECK(NormalizeKey("(MBI)").expansion == "mbi");
}

TEST_CASE("acronym surface matches an expanded canonical through its alias") {
  const auto dict = Dict({{"Classroom Assessment Scoring System (CLASS)", {"CLASS"}, {}, {}}});
  const SurfaceMatch m = MatchSurface("CLASS (Classroom Assessment Scoring System)", dict, 0.9);
  CHECK(m.kind == MatchKind::kAlias);
  CHECK(m.canonical_name == "Classroom Assessment Scoring System (CLASS)");
  CHECK(m.score == 1.0);
  CHECK(MatchSurface("classroom assessment scoring system", dict, 0.9).kind == MatchKind::kExact);
}

TEST_CASE("unknown surface passes through normalized") {
  const auto dict = InstrumentDictionary::Load(FixtureDir() / "dictionary.json");
  const SurfaceMatch m = MatchSurface("Teacher Stress Diary", dict, 0.9);
  CHECK(m.kind == MatchKind::kUnmatched);
  CHECK(m.canonical_name == "teacher stress diary");
  CHECK(m.canonical_name == UnmatchedName("Teacher  Stress Diary"));
}

TEST_CASE("hyphen variants of a battery name") {
  const auto dict = Dict({{"Woodcock-Johnson Tests", {"Woodcock-Johnson-III"}, {}, {}}});
  const SurfaceMatch m = MatchSurface("Woodcock Johnson III", dict, 0.9);
  // Oracle over the normalized strings.
  const std::string a = NormalizeKey("Woodcock Johnson III").key;
  const std::string b = NormalizeKey("Woodcock-Johnson-III").key;
  const double oracle = 1.0 - static_cast<double>(testing::NaiveLevenshtein(a, b)) /
                                  static_cast<double>(std::max(a.size(), b.size()));
  CHECK(oracle >= 0.9);
  CHECK(m.canonical_name == "Woodcock-Johnson Tests");
  CHECK(m.score >= 0.9);
  CHECK(m.score == doctest::Approx(oracle));
  CHECK(m.kind != MatchKind::kUnmatched);
}

TEST_CASE("misspelled battery is a fuzzy match") {
  const auto dict = InstrumentDictionary::Load(FixtureDir() / "dictionary.json");
  const SurfaceMatch m = MatchSurface("Woodcok-Johnson III", dict, 0.9);
  CHECK(m.kind == MatchKind::kFuzzy);
  CHECK(m.canonical_name == "Woodcock-Johnson III");
  CHECK(m.score == doctest::Approx(1.0 - 1.0 / 20.0));
  CHECK(MatchSurface("Woodcok-Johnson III", dict, 0.96).kind == MatchKind::kUnmatched);
}

TEST_CASE("exact beats alias beats fuzzy on colliding names") {
  const auto dict = Dict({{"Math Anxiety Scales", {}, {}, {}},
                          {"Math Anxiety Scale", {}, {}, {}},
                          {"Numeracy Index", {"Math Anxiety Scaled"}, {}, {}}});
  SurfaceMatch m = MatchSurface("math anxiety scale", dict, 0.9);
  CHECK(m.kind == MatchKind::kExact);
  CHECK(m.canonical_name == "Math Anxiety Scale");
  m = MatchSurface("Math Anxiety Scaled", dict, 0.9);
  CHECK(m.kind == MatchKind::kAlias);
  CHECK(m.canonical_name == "Numeracy Index");
  m = MatchSurface("Math Anxiety Scalez", dict, 0.9);
  CHECK(m.kind == MatchKind::kFuzzy);
}

TEST_CASE("normalize merges surfaces and collapses sub-tests") {
  const auto dict = InstrumentDictionary::Load(FixtureDir() / "dictionary.json");
  const std::vector<std::string> surfaces = {"Woodcock-Johnson III (WJ-III)",
                                             "WJ-III Letter-Word Identification", "WJ-III",
                                             "Woodcock-Johnson III (WJ-III)", "Teacher Stress Diary"};
  const auto plain = Normalize(std::span<const std::string>(surfaces), dict, {0.9, false});
  REQUIRE(plain.size() == 3);
  CHECK(plain[0].canonical_name == "Woodcock-Johnson III");
  CHECK(plain[0].surface_names ==
        std::vector<std::string>{"Woodcock-Johnson III (WJ-III)", "WJ-III"});
  CHECK(plain[1].canonical_name == "WJ-III Letter-Word Identification");
  CHECK(plain[2].match_kind == MatchKind::kUnmatched);

  const auto collapsed = Normalize(std::span<const std::string>(surfaces), dict, {0.9, true});
  REQUIRE(collapsed.size() == 2);
  CHECK(collapsed[0].canonical_name == "Woodcock-Johnson III");
  CHECK(collapsed[0].surface_names.size() == 3);
  CHECK(dict.RootOf("WJ-III Letter-Word Identification") == "Woodcock-Johnson III");
}

TEST_CASE("dictionary errors carry line numbers") {
  std::string msg = ParseError(R"({
  "version": "t",
  "entries": [
    {"canonical_name": "A", "aliases": ["x"]},
    {"canonical_name": "B", "aliases": ["X"]}
  ]
})");
  CHECK(msg.find("dictionary:5:") != std::string::npos);
  CHECK(msg.find("/entries/1/aliases/0") != std::string::npos);

  msg = ParseError(R"({"version": "t", "entries": [
    {"canonical_name": "A", "parent": "B"},
    {"canonical_name": "B", "parent": "A"}]})");
  CHECK(msg.find("cycle") != std::string::npos);
  CHECK(msg.find("dictionary:2:") != std::string::npos);

  msg = ParseError(R"({"version": "t", "entries": [{"canonical_name": "A", "parent": "Z"}]})");
  CHECK(msg.find("unknown parent") != std::string::npos);
  msg = ParseError("{\"version\": \"t\",\n \"entries\": [{\"canonical_name\": \"A\"},\n {\"canonical_name\": \"a\"}]}");
  CHECK(msg.find("duplicate canonical") != std::string::npos);
  CHECK(msg.find("dictionary:3:") != std::string::npos);
  msg = ParseError(R"({"version": "t", "entries": [{"canonical_name": "A", "default_type": "poll"}]})");
  CHECK(msg.find("/entries/0/default_type") != std::string::npos);
  msg = ParseError("{\"version\": \"t\",\n\"entries\": [,]}");
  CHECK(msg.find("dictionary:2:") != std::string::npos);
  CHECK_THROWS_AS(InstrumentDictionary::Load(FixtureDir() / "missing.json"), Error);
}

TEST_CASE("normalize key is idempotent on random strings") {
  Gen gen(8);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::string s = testing::RandomSurface(gen);
    const NormalizedKey k = NormalizeKey(s);
    CHECK(NormalizeKey(k.key) == NormalizedKey{k.key, ""});
    CHECK(NormalizeKey(k.expansion) == NormalizedKey{k.expansion, ""});
    CHECK(UnmatchedName(UnmatchedName(s)) == UnmatchedName(s));
    if (!k.key.empty()) CHECK(NormalizeKey(UnmatchedName(s)) == k);
  }
}

TEST_CASE("fuzzy score agrees with the naive edit distance") {
  Gen gen(9);
  for (int iter = 0; iter < 500; ++iter) {
    std::string base = testing::RandomWord(gen, 3 + gen.Below(8));
    if (gen.Chance(0.5)) base += " " + testing::RandomWord(gen, 2 + gen.Below(8));
    const std::string other = testing::Perturb(gen, base, gen.Below(3));
    const std::string a = NormalizeKey(other).key;
    const std::string b = NormalizeKey(base).key;
    const std::size_t longest = std::max(a.size(), b.size());
    const double oracle =
        longest == 0 ? 1.0 : 1.0 - static_cast<double>(testing::NaiveLevenshtein(a, b)) / longest;
    CHECK(FuzzyScore(a, b) == doctest::Approx(oracle));

    const auto dict = Dict({{base, {}, {}, {}}});
    const SurfaceMatch m = MatchSurface(other, dict, 0.9);
    if (a == b) {
      CHECK(m.kind == MatchKind::kExact);
    } else if (oracle >= 0.9) {
      CHECK(m.kind == MatchKind::kFuzzy);
      CHECK(m.score == doctest::Approx(oracle));
    } else {
      CHECK(m.kind == MatchKind::kUnmatched);
    }
  }
}

TEST_CASE("exact wins over a fuzzy neighbour in either order") {
  Gen gen(10);
  for (int iter = 0; iter < 300; ++iter) {
    const std::string word = testing::RandomWord(gen, 6 + gen.Below(10));
    std::string neighbour = testing::Perturb(gen, word, 1);
    if (NormalizeKey(neighbour).key == word || neighbour.empty()) continue;
    std::vector<DictEntry> entries = {{neighbour, {}, {}, {}}, {word, {}, {}, {}}};
    if (gen.Chance(0.5)) std::swap(entries[0], entries[1]);
    const auto dict = Dict(entries);
    const SurfaceMatch m = MatchSurface(word, dict, 0.5);
    CHECK(m.kind == MatchKind::kExact);
    CHECK(m.canonical_name == word);
  }
}

TEST_CASE("collapse is idempotent and merging keeps every surface") {
  const auto dict = InstrumentDictionary::Load(FixtureDir() / "dictionary.json");
  const std::vector<std::string> pool = {
      "WJ-III", "Woodcock-Johnson III", "WJ-III Math Fluency", "WJ-III Letter-Word subtest",
      "CLASS", "Classroom Assessment Scoring System", "MBI", "Maslach Burnout Inventry",
      "AMAS", "Teacher Stress Diary", "teacher stress diary", "Home Visit Log", "Parent Engagement Survey"};
  Gen gen(12);
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<std::string> surfaces;
    const std::size_t n = gen.Below(8);
    for (std::size_t i = 0; i < n; ++i) surfaces.push_back(gen.Pick(pool));
    const std::set<std::string> distinct(surfaces.begin(), surfaces.end());
    for (bool collapse : {false, true}) {
      const auto out = Normalize(std::span<const std::string>(surfaces), dict, {0.9, collapse});
      std::size_t total = 0;
      std::set<std::string> names;
      for (const auto& c : out) {
        total += c.surface_names.size();
        CHECK(names.insert(c.canonical_name).second);
        if (c.match_kind == MatchKind::kFuzzy) CHECK(c.match_score >= 0.9);
        if (c.match_kind == MatchKind::kUnmatched) CHECK(dict.Find(c.canonical_name) == nullptr);
      }
      CHECK(total == distinct.size());
      if (collapse) {
        CHECK(CollapseSubtests(out, dict) == out);
        for (const auto& c : out) {
          if (const DictEntry* e = dict.Find(c.canonical_name)) CHECK_FALSE(e->parent.has_value());
        }
      }
    }
  }
}

}  // TEST_SUITE

}  // namespace
}  // namespace instrx
