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

#ifndef INSTRX_NORMALIZER_H_
#define INSTRX_NORMALIZER_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "instrx/instrument_type.h"

namespace instrx {

struct InstrumentMention;

// Comparison form of an instrument name. Parenthesized text is moved out of
// the main key into `expansion`, so "CLASS (Classroom Assessment Scoring
// System)" has key "class" and expansion "classroom assessment scoring
// system". Both parts are lowercased, accent-folded, stripped of
// apostrophes and periods, with other punctuation (hyphens included) turned
// into single spaces.
struct NormalizedKey {
  std::string key;
  std::string expansion;

  // Non-empty parts, key first.
  std::vector<std::string> parts() const;

  bool operator==(const NormalizedKey&) const = default;
};

NormalizedKey NormalizeKey(std::string_view s);

// 1 - edit_distance / max(len_a, len_b), over code points. Two empty strings
// score 1.
double FuzzyScore(std::string_view a, std::string_view b);

struct DictEntry {
  std::string canonical_name;
  std::vector<std::string> aliases;
  std::optional<std::string> parent;  // battery this entry belongs to
  std::optional<InstrumentType> default_type;
};

// Canonical instrument catalog. File format:
//
//   {"version": str,
//    "entries": [{"canonical_name": str, "aliases": [str],
//                 "parent": str?, "default_type": str?}]}
class InstrumentDictionary {
 public:
  InstrumentDictionary() = default;

  // Validates invariants: unique canonical names and aliases (ignoring case),
  // parents that exist, no parent cycles. Throws Error(kMalformedInput).
  InstrumentDictionary(std::string version, std::vector<DictEntry> entries);

  // Errors name the JSON pointer and source line of the offending node.
  static InstrumentDictionary Parse(std::string_view json_text,
                                    std::string_view source_name = "dictionary");
  static InstrumentDictionary Load(const std::filesystem::path& path);

  const std::string& version() const { return version_; }
  const std::vector<DictEntry>& entries() const { return entries_; }

  // Case-insensitive canonical-name lookup.
  const DictEntry* Find(std::string_view canonical_name) const;

  // Topmost ancestor through parent links (the name itself if no parent).
  std::string RootOf(std::string_view canonical_name) const;

  struct IndexedName {
    std::string part;        // one part of a NormalizedKey
    std::size_t entry = 0;   // index into entries()
    bool is_canonical = false;
    bool is_primary = false; // part came from the key, not the expansion
  };
  const std::vector<IndexedName>& index() const { return index_; }

 private:
  std::string version_;
  std::vector<DictEntry> entries_;
  std::vector<IndexedName> index_;
};

enum class MatchKind { kExact, kAlias, kFuzzy, kUnmatched };

const char* MatchKindName(MatchKind kind);

struct CanonicalInstrument {
  std::string canonical_name;
  MatchKind match_kind = MatchKind::kUnmatched;
  double match_score = 0.0;
  std::vector<std::string> surface_names;

  bool operator==(const CanonicalInstrument&) const = default;
};

nlohmann::json CanonicalToJson(const CanonicalInstrument& c);

struct NormalizerOptions {
  double fuzzy_threshold = 0.90;
  bool collapse_subtests = false;
};

struct SurfaceMatch {
  std::string canonical_name;
  MatchKind kind = MatchKind::kUnmatched;
  double score = 0.0;
};

// Matches one surface form. Precedence: exact (the surface key equals a
// canonical key) > alias (any other equal part, including a canonical
// name's parenthesized part) > fuzzy (best score >= threshold, ties to the
// smaller canonical name) > unmatched. Unmatched names keep their
// normalized form as canonical name.
SurfaceMatch MatchSurface(std::string_view surface,
                          const InstrumentDictionary& dict,
                          double fuzzy_threshold);

// Canonical name used for a surface form with no dictionary match.
std::string UnmatchedName(std::string_view surface);

// One CanonicalInstrument per distinct canonical name, in order of first
// appearance; every distinct surface form is listed under exactly one.
std::vector<CanonicalInstrument> Normalize(std::span<const std::string> surfaces,
                                           const InstrumentDictionary& dict,
                                           const NormalizerOptions& options);
std::vector<CanonicalInstrument> Normalize(
    std::span<const InstrumentMention> mentions,
    const InstrumentDictionary& dict, const NormalizerOptions& options);

// Replaces sub-tests by their battery root and merges duplicates.
std::vector<CanonicalInstrument> CollapseSubtests(
    std::vector<CanonicalInstrument> instruments,
    const InstrumentDictionary& dict);

}  // namespace instrx

#endif  // INSTRX_NORMALIZER_H_
