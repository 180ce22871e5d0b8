#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "kge/error.hpp"
#include "kge/text.hpp"

namespace kge {

/// One subject-predicate-object fact over canonical labels.
struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;

  auto operator<=>(const Triple&) const = default;
};

/// Canonicalizes all three labels; throws if any is empty afterwards.
inline Triple make_triple(std::string_view subject, std::string_view predicate,
                          std::string_view object) {
  Triple t{canonicalize_label(subject), canonicalize_label(predicate), canonicalize_label(object)};
  if (t.subject.empty() || t.predicate.empty() || t.object.empty())
    throw ConsistencyError("triple has an empty label");
  return t;
}

/// A triple in id space: subject/object index the entity vocabulary,
/// predicate indexes the relation vocabulary.
struct Triad {
  std::uint32_t s = 0;
  std::uint32_t p = 0;
  std::uint32_t o = 0;

  auto operator<=>(const Triad&) const = default;
};

struct TriadHash {
  std::size_t operator()(const Triad& t) const noexcept {
    std::uint64_t h = (static_cast<std::uint64_t>(t.s) << 32) ^ t.o;
    h ^= static_cast<std::uint64_t>(t.p) * 0x9e3779b97f4a7c15ULL;
    h ^= h >> 29;
    h *= 0xbf58476d1ce4e5b9ULL;
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

using TriadSet = std::unordered_set<Triad, TriadHash>;

/// Which end of a triple is replaced (corruption) or predicted (ranking).
enum class Side : std::uint8_t { Subject, Object };

inline const char* to_string(Side s) { return s == Side::Subject ? "subject" : "object"; }

/// Insertion-ordered label <-> id map.
class Vocabulary {
 public:
  std::optional<std::uint32_t> find(std::string_view label) const {
    const auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t id(std::string_view label) const {
    if (auto found = find(label)) return *found;
    throw LookupError("unknown label '" + std::string(label) + "'");
  }

  bool contains(std::string_view label) const { return find(label).has_value(); }

  std::uint32_t intern(const std::string& label) {
    const auto [it, inserted] =
        index_.try_emplace(label, static_cast<std::uint32_t>(labels_.size()));
    if (inserted) labels_.push_back(label);
    return it->second;
  }

  const std::string& label(std::uint32_t id) const {
    if (id >= labels_.size()) throw LookupError("id " + std::to_string(id) + " out of range");
    return labels_[id];
  }

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  bool operator==(const Vocabulary& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

class GraphBuilder;

/// Deduplicated triple set with entity and relation vocabularies. Immutable
/// once built; vocabulary order is first occurrence in insertion order.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  const Vocabulary& entities() const noexcept { return entities_; }
  const Vocabulary& relations() const noexcept { return relations_; }
  std::span<const Triad> triads() const noexcept { return triads_; }
  std::size_t size() const noexcept { return triads_.size(); }
  bool empty() const noexcept { return triads_.empty(); }

  bool contains(const Triad& t) const { return index_.contains(t); }

  bool contains(const Triple& t) const {
    const auto s = entities_.find(t.subject);
    const auto p = relations_.find(t.predicate);
    const auto o = entities_.find(t.object);
    return s && p && o && contains(Triad{*s, *p, *o});
  }

  Triple to_triple(const Triad& t) const {
    return Triple{entities_.label(t.s), relations_.label(t.p), entities_.label(t.o)};
  }

  std::vector<Triple> triples() const {
    std::vector<Triple> out;
    out.reserve(triads_.size());
    for (const auto& t : triads_) out.push_back(to_triple(t));
    return out;
  }

  /// Same triples (as labelled facts), regardless of vocabulary order.
  bool same_triples(const KnowledgeGraph& other) const {
    if (size() != other.size()) return false;
    for (const auto& t : triads_)
      if (!other.contains(to_triple(t))) return false;
    return true;
  }

 private:
  friend class GraphBuilder;
  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<Triad> triads_;
  TriadSet index_;
};

class GraphBuilder {
 public:
  GraphBuilder() = default;
  explicit GraphBuilder(KnowledgeGraph base) : g_(std::move(base)) {}

  /// Labels must already be canonical. Returns false for a duplicate.
  bool add(const Triple& t) {
    if (t.subject.empty() || t.predicate.empty() || t.object.empty())
      throw ConsistencyError("triple has an empty label");
    const Triad triad{g_.entities_.intern(t.subject), g_.relations_.intern(t.predicate),
                      g_.entities_.intern(t.object)};
    if (!g_.index_.insert(triad).second) return false;
    g_.triads_.push_back(triad);
    return true;
  }

  bool add(std::string_view s, std::string_view p, std::string_view o) {
    return add(make_triple(s, p, o));
  }

  std::size_t size() const noexcept { return g_.size(); }
  const KnowledgeGraph& peek() const noexcept { return g_; }

  KnowledgeGraph build() && { return std::move(g_); }

 private:
  KnowledgeGraph g_;
};

inline KnowledgeGraph graph_from_triples(std::span<const Triple> triples) {
  GraphBuilder b;
  for (const auto& t : triples) b.add(t);
  return std::move(b).build();
}

/// Triples of `a` followed by those of `b` not already present.
inline KnowledgeGraph merge(const KnowledgeGraph& a, const KnowledgeGraph& b) {
  GraphBuilder builder(a);
  for (const auto& t : b.triads()) builder.add(b.to_triple(t));
  return std::move(builder).build();
}

struct LoadedGraph {
  KnowledgeGraph graph;
  std::size_t lines_read = 0;
  std::size_t duplicates = 0;
};

/// Parses `subject<TAB>predicate<TAB>object` lines. Blank lines are skipped.
inline LoadedGraph parse_triples(std::string_view content, std::string_view source = "<memory>") {
  LoadedGraph result;
  GraphBuilder builder;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const auto line = strip_cr(content.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (is_blank(line)) continue;
    ++result.lines_read;
    const auto fields = split_fields(line);
    if (fields.size() != 3)
      throw ParseError(std::string(source), line_no,
                       "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    Triple t{canonicalize_label(fields[0]), canonicalize_label(fields[1]),
             canonicalize_label(fields[2])};
    if (t.subject.empty() || t.predicate.empty() || t.object.empty())
      throw ParseError(std::string(source), line_no, "empty label");
    if (!builder.add(t)) ++result.duplicates;
  }
  if (builder.size() == 0) throw EmptyGraphError(std::string(source) + ": no triples");
  result.graph = std::move(builder).build();
  return result;
}

inline LoadedGraph load_triples(const std::filesystem::path& path) {
  return parse_triples(read_file(path), path.string());
}

inline std::string format_triples(const KnowledgeGraph& g) {
  std::string out;
  for (const auto& t : g.triads()) {
    out += g.entities().label(t.s);
    out += '\t';
    out += g.relations().label(t.p);
    out += '\t';
    out += g.entities().label(t.o);
    out += '\n';
  }
  return out;
}

inline void write_triples(const KnowledgeGraph& g, const std::filesystem::path& path) {
  write_file_atomic(path, format_triples(g));
}

}  // namespace kge
