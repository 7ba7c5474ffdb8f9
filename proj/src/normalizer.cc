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

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "instrx/error.h"
#include "instrx/extraction_chain.h"
#include "instrx/json_locator.h"
#include "instrx/text_util.h"

namespace instrx {
namespace {

using nlohmann::json;

bool IsDroppedPunct(char32_t cp) {
  return cp == U'\'' || cp == U'.' || cp == 0x2019 || cp == 0x2018 ||
         cp == 0x02BC;
}

std::string Squeeze(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
    out.push_back(c);
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

// Case-insensitive identity used for dictionary uniqueness checks.
std::string NameIdentity(std::string_view s) {
  return text::Fold(text::CollapseWhitespace(s));
}

int KindRank(MatchKind kind) { return static_cast<int>(kind); }

}  // namespace

std::vector<std::string> NormalizedKey::parts() const {
  std::vector<std::string> out;
  if (!key.empty()) out.push_back(key);
  if (!expansion.empty()) out.push_back(expansion);
  return out;
}

NormalizedKey NormalizeKey(std::string_view s) {
  std::string main;
  std::string paren;
  int depth = 0;
  for (char32_t cp : text::DecodeUtf8(s)) {
    std::string& out = depth > 0 ? paren : main;
    if (cp == U'(') {
      out.push_back(' ');
      ++depth;
      continue;
    }
    if (cp == U')') {
      out.push_back(' ');
      if (depth > 0) --depth;
      continue;
    }
    for (char32_t f : text::FoldChar(cp)) {
      if (IsDroppedPunct(f)) continue;
      if (text::IsAlnum(f)) {
        text::AppendUtf8(f, out);
      } else {
        out.push_back(' ');
      }
    }
  }
  return {Squeeze(main), Squeeze(paren)};
}

double FuzzyScore(std::string_view a, std::string_view b) {
  const std::u32string ua = text::DecodeUtf8(a);
  const std::u32string ub = text::DecodeUtf8(b);
  const std::size_t longest = std::max(ua.size(), ub.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(text::EditDistance(ua, ub)) /
                   static_cast<double>(longest);
}

// ---------------------------------------------------------------------------

InstrumentDictionary::InstrumentDictionary(std::string version,
                                           std::vector<DictEntry> entries)
    : version_(std::move(version)), entries_(std::move(entries)) {
  std::map<std::string, std::size_t> canonical;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const std::string& name = entries_[i].canonical_name;
    if (text::Trim(name).empty()) {
      throw Error(ErrorKind::kMalformedInput,
                  "/entries/" + std::to_string(i) + "/canonical_name: empty");
    }
    if (!canonical.emplace(NameIdentity(name), i).second) {
      throw Error(ErrorKind::kMalformedInput,
                  "/entries/" + std::to_string(i) +
                      "/canonical_name: duplicate canonical name \"" + name + "\"");
    }
  }
  std::map<std::string, std::size_t> alias_owner;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& aliases = entries_[i].aliases;
    for (std::size_t a = 0; a < aliases.size(); ++a) {
      const auto [it, fresh] = alias_owner.emplace(NameIdentity(aliases[a]), i);
      if (!fresh) {
        throw Error(ErrorKind::kMalformedInput,
                    "/entries/" + std::to_string(i) + "/aliases/" +
                        std::to_string(a) + ": alias \"" + aliases[a] +
                        "\" already listed for \"" +
                        entries_[it->second].canonical_name + "\"");
      }
    }
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!entries_[i].parent) continue;
    if (canonical.find(NameIdentity(*entries_[i].parent)) == canonical.end()) {
      throw Error(ErrorKind::kMalformedInput,
                  "/entries/" + std::to_string(i) + "/parent: unknown parent \"" +
                      *entries_[i].parent + "\"");
    }
    std::set<std::size_t> visited{i};
    std::size_t at = i;
    while (entries_[at].parent) {
      at = canonical.at(NameIdentity(*entries_[at].parent));
      if (!visited.insert(at).second) {
        throw Error(ErrorKind::kMalformedInput,
                    "/entries/" + std::to_string(i) +
                        "/parent: parent chain of \"" +
                        entries_[i].canonical_name + "\" has a cycle");
      }
    }
  }

  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto add = [&](const std::string& name, bool is_canonical) {
      const NormalizedKey k = NormalizeKey(name);
      if (!k.key.empty()) index_.push_back({k.key, i, is_canonical, true});
      if (!k.expansion.empty()) index_.push_back({k.expansion, i, is_canonical, false});
    };
    add(entries_[i].canonical_name, true);
    for (const auto& alias : entries_[i].aliases) add(alias, false);
  }
}

InstrumentDictionary InstrumentDictionary::Parse(std::string_view json_text,
                                                 std::string_view source_name) {
  const std::string src(source_name);
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) {
    try {
      const json ignored = json::parse(json_text);
      static_cast<void>(ignored);
    } catch (const json::parse_error& e) {
      const auto pos = JsonLocator::PositionOf(json_text, e.byte > 0 ? e.byte - 1 : 0);
      throw Error(ErrorKind::kMalformedInput,
                  src + ":" + std::to_string(pos.line) + ":" +
                      std::to_string(pos.column) + ": invalid JSON: " + e.what());
    }
  }
  const JsonLocator locator(json_text);
  auto fail = [&](const std::string& pointer, const std::string& what) -> Error {
    const auto pos = locator.Locate(pointer);
    return Error(ErrorKind::kMalformedInput,
                 src + ":" + std::to_string(pos.line) + ":" +
                     std::to_string(pos.column) + ": " +
                     (pointer.empty() ? "/" : pointer) + ": " + what);
  };

  if (!root.is_object()) throw fail("", "dictionary must be an object");
  if (!root.contains("version") || !root["version"].is_string()) {
    throw fail("/version", "\"version\" must be a string");
  }
  if (!root.contains("entries") || !root["entries"].is_array()) {
    throw fail("/entries", "\"entries\" must be an array");
  }
  std::vector<DictEntry> entries;
  const json& list = root["entries"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string ptr = "/entries/" + std::to_string(i);
    const json& node = list[i];
    if (!node.is_object()) throw fail(ptr, "entry must be an object");
    DictEntry entry;
    if (!node.contains("canonical_name") || !node["canonical_name"].is_string()) {
      throw fail(ptr, "\"canonical_name\" must be a string");
    }
    entry.canonical_name = node["canonical_name"].get<std::string>();
    if (node.contains("aliases")) {
      const json& aliases = node["aliases"];
      if (!aliases.is_array()) throw fail(ptr + "/aliases", "aliases must be an array");
      for (std::size_t a = 0; a < aliases.size(); ++a) {
        if (!aliases[a].is_string()) {
          throw fail(ptr + "/aliases/" + std::to_string(a), "alias must be a string");
        }
        entry.aliases.push_back(aliases[a].get<std::string>());
      }
    }
    if (node.contains("parent") && !node["parent"].is_null()) {
      if (!node["parent"].is_string()) throw fail(ptr + "/parent", "parent must be a string");
      entry.parent = node["parent"].get<std::string>();
    }
    if (node.contains("default_type") && !node["default_type"].is_null()) {
      const json& t = node["default_type"];
      const auto type = t.is_string() ? TypeAliasMap(t.get<std::string>()) : std::nullopt;
      if (!type) throw fail(ptr + "/default_type", "unknown instrument type " + t.dump());
      entry.default_type = type;
    }
    entries.push_back(std::move(entry));
  }

  try {
    return InstrumentDictionary(root["version"].get<std::string>(), std::move(entries));
  } catch (const Error& e) {
    // Invariant errors start with the JSON pointer of the offending node.
    const std::string what = e.what();
    const std::string pointer = what.substr(0, what.find(':'));
    throw fail(pointer, what.substr(what.find(':') + 2));
  }
}

InstrumentDictionary InstrumentDictionary::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open dictionary " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str(), path.string());
}

const DictEntry* InstrumentDictionary::Find(std::string_view canonical_name) const {
  const std::string id = NameIdentity(canonical_name);
  for (const DictEntry& e : entries_) {
    if (NameIdentity(e.canonical_name) == id) return &e;
  }
  return nullptr;
}

std::string InstrumentDictionary::RootOf(std::string_view canonical_name) const {
  const DictEntry* entry = Find(canonical_name);
  if (entry == nullptr) return std::string(canonical_name);
  // Cycles are rejected at construction.
  while (entry->parent) entry = Find(*entry->parent);
  return entry->canonical_name;
}

// ---------------------------------------------------------------------------

const char* MatchKindName(MatchKind kind) {
  switch (kind) {
    case MatchKind::kExact: return "exact";
    case MatchKind::kAlias: return "alias";
    case MatchKind::kFuzzy: return "fuzzy";
    case MatchKind::kUnmatched: return "unmatched";
  }
  return "unmatched";
}

json CanonicalToJson(const CanonicalInstrument& c) {
  return {{"canonical_name", c.canonical_name},
          {"match_kind", MatchKindName(c.match_kind)},
          {"match_score", c.match_score},
          {"surface_names", c.surface_names}};
}

std::string UnmatchedName(std::string_view surface) {
  const NormalizedKey k = NormalizeKey(surface);
  if (k.key.empty() && k.expansion.empty()) return text::CollapseWhitespace(surface);
  if (k.key.empty()) return k.expansion;
  if (k.expansion.empty()) return k.key;
  return k.key + " (" + k.expansion + ")";
}

SurfaceMatch MatchSurface(std::string_view surface, const InstrumentDictionary& dict,
                          double fuzzy_threshold) {
  const NormalizedKey key = NormalizeKey(surface);
  const std::vector<std::string> parts = key.parts();
  const auto& index = dict.index();

  // Exact: the surface's primary key equals a canonical name's primary key.
  if (!key.key.empty()) {
    for (const auto& name : index) {
      if (name.is_canonical && name.is_primary && name.part == key.key) {
        return {dict.entries()[name.entry].canonical_name, MatchKind::kExact, 1.0};
      }
    }
  }
  // Alias: any other part agreement, with canonical expansions counted as
  // aliases. Prefer key-to-key agreement, then dictionary order.
  {
    const InstrumentDictionary::IndexedName* best = nullptr;
    bool best_primary = false;
    for (const auto& name : index) {
      for (std::size_t p = 0; p < parts.size(); ++p) {
        if (parts[p] != name.part) continue;
        const bool primary = p == 0 && !key.key.empty() && name.is_primary;
        if (best == nullptr || (primary && !best_primary) ||
            (primary == best_primary && name.entry < best->entry)) {
          best = &name;
          best_primary = primary;
        }
      }
    }
    if (best != nullptr) {
      return {dict.entries()[best->entry].canonical_name, MatchKind::kAlias, 1.0};
    }
  }

  double best_score = -1.0;
  const std::string* best_name = nullptr;
  for (const auto& name : index) {
    for (const std::string& part : parts) {
      const double score = FuzzyScore(part, name.part);
      const std::string& canonical = dict.entries()[name.entry].canonical_name;
      if (score > best_score ||
          (score == best_score && best_name != nullptr && canonical < *best_name)) {
        best_score = score;
        best_name = &canonical;
      }
    }
  }
  if (best_name != nullptr && best_score >= fuzzy_threshold) {
    return {*best_name, MatchKind::kFuzzy, best_score};
  }
  return {UnmatchedName(surface), MatchKind::kUnmatched, 0.0};
}

namespace {

void MergeInto(std::vector<CanonicalInstrument>& out, CanonicalInstrument item) {
  for (CanonicalInstrument& existing : out) {
    if (existing.canonical_name != item.canonical_name) continue;
    if (KindRank(item.match_kind) < KindRank(existing.match_kind)) {
      existing.match_kind = item.match_kind;
    }
    existing.match_score = std::max(existing.match_score, item.match_score);
    for (std::string& s : item.surface_names) {
      if (std::find(existing.surface_names.begin(), existing.surface_names.end(), s) ==
          existing.surface_names.end()) {
        existing.surface_names.push_back(std::move(s));
      }
    }
    return;
  }
  out.push_back(std::move(item));
}

}  // namespace

std::vector<CanonicalInstrument> Normalize(std::span<const std::string> surfaces,
                                           const InstrumentDictionary& dict,
                                           const NormalizerOptions& options) {
  std::vector<CanonicalInstrument> out;
  std::set<std::string> seen;
  for (const std::string& surface : surfaces) {
    if (!seen.insert(surface).second) continue;
    const SurfaceMatch m = MatchSurface(surface, dict, options.fuzzy_threshold);
    MergeInto(out, {m.canonical_name, m.kind, m.score, {surface}});
  }
  if (options.collapse_subtests) out = CollapseSubtests(std::move(out), dict);
  return out;
}

std::vector<CanonicalInstrument> Normalize(std::span<const InstrumentMention> mentions,
                                           const InstrumentDictionary& dict,
                                           const NormalizerOptions& options) {
  std::vector<std::string> surfaces;
  surfaces.reserve(mentions.size());
  for (const auto& m : mentions) surfaces.push_back(m.surface_name);
  return Normalize(surfaces, dict, options);
}

std::vector<CanonicalInstrument> CollapseSubtests(
    std::vector<CanonicalInstrument> instruments, const InstrumentDictionary& dict) {
  std::vector<CanonicalInstrument> out;
  for (CanonicalInstrument& item : instruments) {
    if (item.match_kind != MatchKind::kUnmatched) {
      item.canonical_name = dict.RootOf(item.canonical_name);
    }
    MergeInto(out, std::move(item));
  }
  return out;
}

}  // namespace instrx
