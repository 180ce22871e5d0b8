#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "kge/error.hpp"
#include "kge/graph.hpp"
#include "kge/model.hpp"
#include "kge/ontology.hpp"
#include "kge/random.hpp"
#include "kge/text.hpp"

namespace kge {

inline constexpr std::string_view kSameAsRelation = "same_as";
inline constexpr std::string_view kMentionsRelation = "mentions";
inline constexpr std::string_view kSentencePrefix = "sentence:";

class EmptyTextError : public Error {
 public:
  using Error::Error;
};

struct SentenceRecord {
  std::string sentence_id;
  std::string text;
  std::vector<std::string> concepts;  // canonicalized, deduplicated, in order
};

struct LoadedSentences {
  std::vector<SentenceRecord> records;
  std::size_t dropped_without_concepts = 0;
};

/// `sentence_id<TAB>text<TAB>concept1|concept2|...` per line. Records with no
/// concepts are dropped and counted.
inline LoadedSentences parse_sentences(std::string_view content, std::string_view source = "<memory>") {
  LoadedSentences out;
  std::unordered_set<std::string> ids;
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
    if (f.size() != 3) throw ParseError(std::string(source), line_no, "expected 3 tab-separated fields");
    SentenceRecord rec{canonicalize_label(f[0]), std::string(f[1]), {}};
    if (rec.sentence_id.empty()) throw ParseError(std::string(source), line_no, "empty sentence id");
    if (!ids.insert(rec.sentence_id).second)
      throw ParseError(std::string(source), line_no, "duplicate sentence id '" + rec.sentence_id + "'");
    for (auto c : split_fields(f[2], '|')) {
      auto label = canonicalize_label(c);
      if (!label.empty() && std::find(rec.concepts.begin(), rec.concepts.end(), label) == rec.concepts.end())
        rec.concepts.push_back(std::move(label));
    }
    if (rec.concepts.empty()) {
      ++out.dropped_without_concepts;
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

inline LoadedSentences load_sentences(const std::filesystem::path& path) {
  return parse_sentences(read_file(path), path.string());
}

/// Per-token vectors, either derived from a seed or read from a vector file
/// (`token v1 ... vd` per line).
class TokenVectorSource {
 public:
  enum class Mode { SeededRandom, File };

  static TokenVectorSource seeded(std::size_t dimension, std::uint64_t seed) {
    if (dimension == 0) throw ConfigError("dimension", "must be positive");
    TokenVectorSource s;
    s.mode_ = Mode::SeededRandom;
    s.dimension_ = dimension;
    s.seed_ = seed;
    return s;
  }

  static TokenVectorSource parse(std::string_view content, std::size_t dimension,
                                 std::string_view source = "<memory>") {
    if (dimension == 0) throw ConfigError("dimension", "must be positive");
    TokenVectorSource s;
    s.mode_ = Mode::File;
    s.dimension_ = dimension;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < content.size()) {
      auto end = content.find('\n', start);
      if (end == std::string_view::npos) end = content.size();
      const auto line = strip_cr(content.substr(start, end - start));
      start = end + 1;
      ++line_no;
      if (is_blank(line)) continue;
      std::istringstream is{std::string(line)};
      std::string token;
      is >> token;
      std::vector<double> v;
      for (double x; is >> x;) v.push_back(x);
      if (!is.eof())
        throw ParseError(std::string(source), line_no, "non-numeric vector component");
      if (v.size() != dimension)
        throw ParseError(std::string(source), line_no,
                         "vector has " + std::to_string(v.size()) + " components, expected " +
                             std::to_string(dimension));
      s.vectors_.insert_or_assign(canonicalize_label(token), std::move(v));
    }
    return s;
  }

  static TokenVectorSource from_file(const std::filesystem::path& path, std::size_t dimension) {
    return parse(read_file(path), dimension, path.string());
  }

  Mode mode() const noexcept { return mode_; }
  std::size_t dimension() const noexcept { return dimension_; }

  /// Vector for a token; nullopt for a token missing from a vector file.
  std::optional<std::vector<double>> vector(std::string_view token) const {
    if (mode_ == Mode::File) {
      const auto it = vectors_.find(std::string(token));
      if (it == vectors_.end()) return std::nullopt;
      return it->second;
    }
    auto rng = RandomStream::derive(seed_, "token", fnv1a64(token));
    std::vector<double> v(dimension_);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
  }

 private:
  TokenVectorSource() = default;
  Mode mode_ = Mode::SeededRandom;
  std::size_t dimension_ = 0;
  std::uint64_t seed_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

enum class PoolMode { Mean, Max };

inline PoolMode parse_pool_mode(std::string_view s) {
  const auto v = canonicalize_label(s);
  if (v == "mean") return PoolMode::Mean;
  if (v == "max") return PoolMode::Max;
  throw ConfigError("pool", "expected mean or max, got '" + std::string(s) + "'");
}

/// Mean or elementwise max of the token vectors of `text`. Tokens are pooled
/// in sorted order so the mean does not depend on word order.
inline std::vector<double> pool_tokens(std::string_view text, const TokenVectorSource& source,
                                       PoolMode mode = PoolMode::Mean) {
  auto tokens = tokenize(text);
  std::sort(tokens.begin(), tokens.end());
  std::vector<double> acc(source.dimension(), mode == PoolMode::Max ? -INFINITY : 0.0);
  std::size_t used = 0;
  for (const auto& tok : tokens) {
    const auto v = source.vector(tok);
    if (!v) continue;
    ++used;
    for (std::size_t j = 0; j < acc.size(); ++j)
      acc[j] = mode == PoolMode::Max ? std::max(acc[j], (*v)[j]) : acc[j] + (*v)[j];
  }
  if (used == 0) throw EmptyTextError("no usable tokens in text '" + std::string(text) + "'");
  if (mode == PoolMode::Mean)
    for (auto& x : acc) x /= static_cast<double>(used);
  return acc;
}

/// Entity label -> initial vector.
struct InitHints {
  std::vector<std::pair<std::string, std::vector<double>>> rows;

  bool empty() const noexcept { return rows.empty(); }
  std::size_t size() const noexcept { return rows.size(); }
};

struct VariationOptions {
  const TokenVectorSource* tokens = nullptr;  // required for variation 3
  PoolMode pool = PoolMode::Mean;
};

struct VariationResult {
  KnowledgeGraph graph;
  std::optional<InitHints> hints;  // variation 3 only
  std::size_t concepts_added = 0;
  std::size_t same_as_edges = 0;
  std::size_t unlinked_concepts = 0;
  std::size_t sentence_entities = 0;
  std::size_t mentions_edges = 0;
  std::size_t sentences_without_vector = 0;
};

inline std::string sentence_entity_label(std::string_view sentence_id) {
  return canonicalize_label(std::string(kSentencePrefix) + std::string(sentence_id));
}

/// 1: graph unchanged. 2: adds text concepts, each variant linked to its
/// lexicon concept by a same_as edge. 3: variation 2 plus one entity per
/// sentence with a mentions edge per concept, and pooled-vector init hints.
inline VariationResult build_variation(const KnowledgeGraph& graph, std::span<const SentenceRecord> sentences,
                                       const Lexicon& lexicon, int variation,
                                       const VariationOptions& options = {}) {
  if (variation < 1 || variation > 3) throw ConfigError("variation", "must be 1, 2 or 3");
  VariationResult r;
  if (variation == 1) {
    r.graph = graph;
    return r;
  }
  if (sentences.empty()) throw ConfigError("sentences", "variation " + std::to_string(variation) + " needs sentence records");
  for (auto reserved : {kSameAsRelation, kMentionsRelation})
    if (graph.relations().contains(reserved))
      throw ConsistencyError("input graph uses the reserved relation '" + std::string(reserved) + "'");
  if (variation == 3 && options.tokens == nullptr)
    throw ConfigError("vectors", "variation 3 needs a token vector source");

  GraphBuilder b(graph);
  const std::string same_as(kSameAsRelation);
  std::unordered_set<std::string> seen;
  for (const auto& rec : sentences) {
    for (const auto& c : rec.concepts) {
      if (!seen.insert(c).second) continue;
      const auto m = canonicalize_mention(c, lexicon);
      if (m.mapped() && *m.canonical != m.mention) {
        const bool is_new = !b.peek().entities().contains(m.mention);
        if (b.add(Triple{m.mention, same_as, *m.canonical})) ++r.same_as_edges;
        if (is_new) ++r.concepts_added;
      } else if (!(m.mapped() && graph.entities().contains(m.mention))) {
        ++r.unlinked_concepts;
      }
    }
  }

  if (variation == 3) {
    const std::string mentions(kMentionsRelation);
    InitHints hints;
    for (const auto& rec : sentences) {
      const auto label = sentence_entity_label(rec.sentence_id);
      std::size_t added = 0;
      for (const auto& c : rec.concepts)
        if (b.add(Triple{label, mentions, c})) ++added;
      r.mentions_edges += added;
      if (added > 0) ++r.sentence_entities;
      try {
        hints.rows.emplace_back(label, pool_tokens(rec.text, *options.tokens, options.pool));
      } catch (const EmptyTextError&) {
        ++r.sentences_without_vector;
      }
    }
    r.hints = std::move(hints);
  }
  r.graph = std::move(b).build();
  return r;
}

/// Overwrites hinted entity rows (the real half for ComplEx) with the pooled
/// vectors rescaled to the RMS row norm of the model's current entity rows.
inline EmbeddingModel apply_init_hints(EmbeddingModel model, const InitHints& hints) {
  if (hints.empty()) return model;
  const auto k = static_cast<std::size_t>(model.config().k);
  std::vector<std::uint32_t> ids;
  ids.reserve(hints.size());
  for (const auto& [label, vec] : hints.rows) {
    const auto id = model.entities().find(label);
    if (!id) throw ConsistencyError("init hint for unknown entity '" + label + "'");
    if (vec.size() != k)
      throw ConfigError("vectors", "hint dimension " + std::to_string(vec.size()) + " does not match k = " +
                                       std::to_string(k));
    ids.push_back(*id);
  }

  auto& table = model.entity_table();
  double sq_total = 0.0;
  for (std::size_t i = 0; i < table.rows; ++i)
    for (std::size_t j = 0; j < k; ++j) sq_total += static_cast<double>(table.row(i)[j]) * table.row(i)[j];
  const double target = std::sqrt(sq_total / static_cast<double>(table.rows));

  for (std::size_t h = 0; h < ids.size(); ++h) {
    const auto& vec = hints.rows[h].second;
    double sq = 0.0;
    for (double x : vec) sq += x * x;
    const double scale = sq > 0.0 ? target / std::sqrt(sq) : 0.0;
    auto row = table.row(ids[h]);
    for (std::size_t j = 0; j < k; ++j) row[j] = static_cast<float>(vec[j] * scale);
  }
  return model;
}

inline std::vector<std::uint32_t> hinted_entities(const EmbeddingModel& model, const InitHints& hints) {
  std::vector<std::uint32_t> ids;
  for (const auto& h : hints.rows)
    if (auto id = model.entities().find(h.first)) ids.push_back(*id);
  return ids;
}

}  // namespace kge
