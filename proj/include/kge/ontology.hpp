#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kge/error.hpp"
#include "kge/graph.hpp"
#include "kge/text.hpp"

namespace kge {

struct LexiconEntry {
  std::string term;
  std::string canonical;
  std::optional<std::string> concept_id;
};

/// Seed terms and their variant -> canonical concept mapping. Every canonical
/// concept is implicitly a term that maps to itself.
class Lexicon {
 public:
  Lexicon() = default;

  explicit Lexicon(std::span<const LexiconEntry> entries) {
    for (const auto& e : entries) add(e.term, e.canonical, e.concept_id);
  }

  void add(std::string_view term, std::string_view canonical,
           std::optional<std::string> concept_id = std::nullopt) {
    auto t = canonicalize_label(term);
    auto c = canonicalize_label(canonical);
    if (t.empty() || c.empty()) throw ConsistencyError("lexicon entry with empty term or concept");

    if (const auto it = term_to_concept_.find(t); it != term_to_concept_.end()) {
      if (it->second != c)
        throw ConsistencyError("lexicon term '" + t + "' maps to both '" + it->second +
                               "' and '" + c + "'");
      return;
    }
    if (concept_set_.contains(t) && t != c)
      throw ConsistencyError("canonical concept '" + t + "' is listed as a variant of '" + c + "'");
    if (const auto it = term_to_concept_.find(c); it != term_to_concept_.end() && it->second != c)
      throw ConsistencyError("concept '" + c + "' is already a variant of '" + it->second + "'");

    term_to_concept_.emplace(t, c);
    if (concept_set_.insert(c).second) {
      concepts_.push_back(c);
      term_to_concept_.emplace(c, c);
    }
    entries_.push_back({std::move(t), std::move(c), std::move(concept_id)});
  }

  const std::vector<LexiconEntry>& entries() const noexcept { return entries_; }
  /// Distinct canonical concepts in first-occurrence order.
  const std::vector<std::string>& concepts() const noexcept { return concepts_; }
  bool is_concept(std::string_view label) const { return concept_set_.contains(std::string(label)); }
  bool empty() const noexcept { return entries_.empty(); }

  /// All terms (variants and concepts) with their concept.
  const std::unordered_map<std::string, std::string>& term_map() const noexcept {
    return term_to_concept_;
  }

 private:
  std::vector<LexiconEntry> entries_;
  std::vector<std::string> concepts_;
  std::unordered_set<std::string> concept_set_;
  std::unordered_map<std::string, std::string> term_to_concept_;
};

/// `term<TAB>canonical_concept[<TAB>concept_id]` per line.
inline Lexicon parse_lexicon(std::string_view content, std::string_view source = "<memory>") {
  Lexicon lex;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const auto line = strip_cr(content.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (is_blank(line)) continue;
    const auto f = split_fields(line);
    if (f.size() != 2 && f.size() != 3)
      throw ParseError(std::string(source), line_no, "expected 2 or 3 tab-separated fields");
    std::optional<std::string> id;
    if (f.size() == 3 && !is_blank(f[2])) id = std::string(f[2]);
    try {
      lex.add(f[0], f[1], std::move(id));
    } catch (const ConsistencyError& e) {
      throw ParseError(std::string(source), line_no, e.what());
    }
  }
  return lex;
}

inline Lexicon load_lexicon(const std::filesystem::path& path) {
  return parse_lexicon(read_file(path), path.string());
}

struct MentionMatch {
  std::string mention;                    // canonicalized input
  std::optional<std::string> canonical;  // empty when no term matched
  std::string matched_term;

  bool mapped() const noexcept { return canonical.has_value(); }
};

namespace detail {

inline bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// True if `term` occurs in `text` starting and ending on word boundaries.
inline bool contains_words(std::string_view text, std::string_view term) {
  for (auto pos = text.find(term); pos != std::string_view::npos; pos = text.find(term, pos + 1)) {
    const bool left = pos == 0 || !word_char(text[pos - 1]) || !word_char(term.front());
    const auto after = pos + term.size();
    const bool right = after == text.size() || !word_char(text[after]) || !word_char(term.back());
    if (left && right) return true;
  }
  return false;
}

}  // namespace detail

/// Longest lexicon term found inside the mention decides the concept; equal
/// lengths prefer the longer concept, then the lexicographically smaller one.
inline MentionMatch canonicalize_mention(std::string_view mention, const Lexicon& lexicon) {
  MentionMatch m{canonicalize_label(mention), std::nullopt, {}};
  const std::string* best_term = nullptr;
  const std::string* best_concept = nullptr;
  for (const auto& [term, canonical] : lexicon.term_map()) {
    if (term.size() > m.mention.size() || !detail::contains_words(m.mention, term)) continue;
    bool better = best_term == nullptr;
    if (!better) {
      if (term.size() != best_term->size()) {
        better = term.size() > best_term->size();
      } else if (canonical.size() != best_concept->size()) {
        better = canonical.size() > best_concept->size();
      } else {
        better = canonical < *best_concept || (canonical == *best_concept && term < *best_term);
      }
    }
    if (better) {
      best_term = &term;
      best_concept = &canonical;
    }
  }
  if (best_term != nullptr) {
    m.canonical = *best_concept;
    m.matched_term = *best_term;
  }
  return m;
}

inline std::vector<MentionMatch> canonicalize_mentions(std::span<const std::string> mentions,
                                                       const Lexicon& lexicon) {
  std::vector<MentionMatch> out;
  out.reserve(mentions.size());
  for (const auto& m : mentions) out.push_back(canonicalize_mention(m, lexicon));
  return out;
}

/// An ontology graph plus the label of its child -> parent relation.
struct OntologySource {
  KnowledgeGraph triples;
  std::string hierarchy_relation = "is a";

  std::string inverse_relation() const { return "inverse " + hierarchy_relation; }

  void validate() const {
    if (!triples.relations().contains(hierarchy_relation))
      throw ConsistencyError("hierarchy relation '" + hierarchy_relation +
                             "' does not occur in the ontology");
  }
};

struct ExtractionResult {
  KnowledgeGraph graph;
  std::vector<std::string> seeds_found;
  std::vector<std::string> seeds_missing;
  std::size_t inverse_edges = 0;

  bool empty_warning() const noexcept { return graph.empty(); }
};

/// One-hop neighbourhood of every lexicon concept: each source triple touching
/// a seed, plus (parent, inverse <hierarchy>, child) for each retained
/// hierarchy edge whose parent is a seed.
inline ExtractionResult extract_first_order(const OntologySource& source, const Lexicon& lexicon) {
  if (lexicon.empty()) throw UsageError("lexicon is empty");
  if (source.triples.empty()) throw EmptyGraphError("ontology source is empty");

  const auto& ents = source.triples.entities();
  std::vector<bool> is_seed(ents.size(), false);
  ExtractionResult r;
  for (const auto& c : lexicon.concepts()) {
    if (auto id = ents.find(c)) {
      is_seed[*id] = true;
      r.seeds_found.push_back(c);
    } else {
      r.seeds_missing.push_back(c);
    }
  }

  const auto hierarchy = source.triples.relations().find(source.hierarchy_relation);
  const auto inverse = canonicalize_label(source.inverse_relation());
  GraphBuilder out;
  for (const auto& t : source.triples.triads()) {
    if (!is_seed[t.s] && !is_seed[t.o]) continue;
    out.add(source.triples.to_triple(t));
    if (hierarchy && t.p == *hierarchy && is_seed[t.o]) {
      if (out.add(Triple{ents.label(t.o), inverse, ents.label(t.s)})) ++r.inverse_edges;
    }
  }
  r.graph = std::move(out).build();
  return r;
}

}  // namespace kge
