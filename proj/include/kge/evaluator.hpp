#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <iomanip>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "kge/checkpoint.hpp"
#include "kge/error.hpp"
#include "kge/graph.hpp"
#include "kge/model.hpp"
#include "kge/split.hpp"
#include "kge/trainer.hpp"

namespace kge {

enum class Protocol { Raw, Filtered };

inline std::string to_string(Protocol p) { return p == Protocol::Raw ? "raw" : "filtered"; }

inline Protocol parse_protocol(std::string_view s) {
  const auto v = canonicalize_label(s);
  if (v == "raw") return Protocol::Raw;
  if (v == "filtered") return Protocol::Filtered;
  throw ConfigError("protocol", "expected raw or filtered, got '" + std::string(s) + "'");
}

struct RankRecord {
  Triad triad;
  Side side = Side::Object;
  std::uint32_t rank = 1;
  Protocol protocol = Protocol::Filtered;
};

struct Metrics {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits10 = 0.0;
};

inline double mean_reciprocal_rank(std::span<const std::uint32_t> ranks) {
  if (ranks.empty()) throw ConsistencyError("no ranks");
  double total = 0.0;
  for (auto r : ranks) total += 1.0 / static_cast<double>(r);
  return total / static_cast<double>(ranks.size());
}

/// Fraction of ranks <= n.
inline double hits_at(std::span<const std::uint32_t> ranks, std::uint32_t n) {
  if (ranks.empty()) throw ConsistencyError("no ranks");
  const auto hit = std::count_if(ranks.begin(), ranks.end(), [n](auto r) { return r <= n; });
  return static_cast<double>(hit) / static_cast<double>(ranks.size());
}

inline Metrics metrics_from_ranks(std::span<const std::uint32_t> ranks) {
  return {mean_reciprocal_rank(ranks), hits_at(ranks, 1), hits_at(ranks, 10)};
}

/// "MRR 0.83, Hits@10 0.87, Hits@1 0.80"
inline std::string format_metrics(const Metrics& m) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << "MRR " << m.mrr << ", Hits@10 " << m.hits10
     << ", Hits@1 " << m.hits1;
  return os.str();
}

/// Known-true triples in a model's id space, for the filtered protocol.
/// Triples whose labels the model does not know are ignored.
class KnownTriples {
 public:
  KnownTriples() = default;

  KnownTriples(const EmbeddingModel& model, std::span<const KnowledgeGraph* const> graphs) {
    for (const auto* g : graphs) add(model, *g);
  }

  void add(const EmbeddingModel& model, const KnowledgeGraph& g) {
    for (const auto& t : g.triads()) {
      const auto s = model.entities().find(g.entities().label(t.s));
      const auto p = model.relations().find(g.relations().label(t.p));
      const auto o = model.entities().find(g.entities().label(t.o));
      if (s && p && o) set_.insert({*s, *p, *o});
    }
  }

  void insert(const Triad& t) { set_.insert(t); }
  bool contains(const Triad& t) const { return set_.contains(t); }
  std::size_t size() const noexcept { return set_.size(); }

 private:
  TriadSet set_;
};

/// Rank of the true entity on `side` among all entities. Candidates scoring
/// strictly higher or equal count against it (ties resolved pessimistically);
/// under the filtered protocol candidates forming a known triple are skipped.
inline RankRecord rank_entity(const EmbeddingModel& model, const Triad& triad, Side side,
                              Protocol protocol, const KnownTriples& known) {
  detail::check_ids(model, triad);
  const double true_score = detail::score_unchecked(model, triad);
  const std::uint32_t truth = side == Side::Subject ? triad.s : triad.o;
  std::uint32_t rank = 1;
  Triad cand = triad;
  auto& slot = side == Side::Subject ? cand.s : cand.o;
  const auto n = static_cast<std::uint32_t>(model.entity_count());
  for (std::uint32_t e = 0; e < n; ++e) {
    if (e == truth) continue;
    slot = e;
    if (protocol == Protocol::Filtered && known.contains(cand)) continue;
    if (detail::score_unchecked(model, cand) >= true_score) ++rank;
  }
  return {triad, side, rank, protocol};
}

struct EvalReport {
  Metrics metrics;
  std::vector<RankRecord> records;
  Protocol protocol = Protocol::Filtered;
  std::string model_identity;
  std::string dataset_identity;
  nlohmann::json config;  // effective configuration echoed for provenance
};

namespace detail {

// Runs fn(i) for i in [0, n) on up to `threads` workers; fn must write only slot i.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += threads) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Maps every test triple into model ids; throws LookupError listing the
/// triples that mention unknown labels.
inline std::vector<Triad> model_triads(const EmbeddingModel& model, const KnowledgeGraph& test) {
  std::vector<Triad> out;
  std::vector<std::string> unknown;
  for (const auto& t : test.triads()) {
    const auto tr = test.to_triple(t);
    const auto s = model.entities().find(tr.subject);
    const auto p = model.relations().find(tr.predicate);
    const auto o = model.entities().find(tr.object);
    if (s && p && o)
      out.push_back({*s, *p, *o});
    else
      unknown.push_back("(" + tr.subject + ", " + tr.predicate + ", " + tr.object + ")");
  }
  if (!unknown.empty()) {
    std::string msg = std::to_string(unknown.size()) + " test triple(s) not covered by the model vocabulary:";
    for (std::size_t i = 0; i < unknown.size() && i < 20; ++i) msg += "\n  " + unknown[i];
    if (unknown.size() > 20) msg += "\n  ...";
    throw LookupError(msg);
  }
  return out;
}

/// Subject- and object-side ranks of every test triple; records are ordered by
/// test triple, subject side first.
inline EvalReport evaluate(const EmbeddingModel& model, const KnowledgeGraph& test,
                           const KnownTriples& known, Protocol protocol, unsigned threads = 1) {
  if (test.empty()) throw EmptyGraphError("test graph is empty");
  const auto triads = model_triads(model, test);
  EvalReport report;
  report.protocol = protocol;
  report.records.resize(2 * triads.size());
  detail::parallel_for(triads.size(), threads, [&](std::size_t i) {
    report.records[2 * i] = rank_entity(model, triads[i], Side::Subject, protocol, known);
    report.records[2 * i + 1] = rank_entity(model, triads[i], Side::Object, protocol, known);
  });
  std::vector<std::uint32_t> ranks;
  ranks.reserve(report.records.size());
  for (const auto& r : report.records) ranks.push_back(r.rank);
  report.metrics = metrics_from_ranks(ranks);
  report.model_identity = to_string(model.family()) + ":" + model_checksum(model);
  report.dataset_identity = to_hex(fnv1a64(format_triples(test)));
  return report;
}

/// Convenience overload: `known` is the union of the given graphs (typically train and test).
inline EvalReport evaluate(const EmbeddingModel& model, const KnowledgeGraph& test,
                           std::span<const KnowledgeGraph* const> known_graphs, Protocol protocol,
                           unsigned threads = 1) {
  return evaluate(model, test, KnownTriples(model, known_graphs), protocol, threads);
}

inline nlohmann::json to_json(const EvalReport& r, bool with_records = true) {
  nlohmann::json j = {{"protocol", to_string(r.protocol)},
                      {"mrr", r.metrics.mrr},
                      {"hits1", r.metrics.hits1},
                      {"hits10", r.metrics.hits10},
                      {"model", r.model_identity},
                      {"dataset", r.dataset_identity},
                      {"config", r.config}};
  if (with_records) {
    auto recs = nlohmann::json::array();
    for (const auto& rec : r.records)
      recs.push_back({{"triad", {rec.triad.s, rec.triad.p, rec.triad.o}},
                      {"side", to_string(rec.side)},
                      {"rank", rec.rank}});
    j["records"] = std::move(recs);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Link prediction queries

struct Prediction {
  std::string entity;
  std::uint32_t id = 0;
  double score = 0.0;
};

namespace detail {

inline std::vector<Prediction> top_candidates(const EmbeddingModel& model, Triad query, Side side,
                                              std::size_t top_k) {
  std::vector<Prediction> all;
  all.reserve(model.entity_count());
  for (std::uint32_t e = 0; e < model.entity_count(); ++e) {
    (side == Side::Subject ? query.s : query.o) = e;
    all.push_back({model.entities().label(e), e, score_unchecked(model, query)});
  }
  const auto k = std::min(top_k, all.size());
  auto by_score = [](const Prediction& a, const Prediction& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), by_score);
  all.resize(k);
  return all;
}

}  // namespace detail

/// Best objects for (subject, predicate, ?), ties broken by entity id.
inline std::vector<Prediction> predict_links(const EmbeddingModel& model, std::string_view subject,
                                             std::string_view predicate, std::size_t top_k) {
  const Triad q{model.entities().id(canonicalize_label(subject)),
                model.relations().id(canonicalize_label(predicate)), 0};
  return detail::top_candidates(model, q, Side::Object, top_k);
}

/// Best subjects for (?, predicate, object).
inline std::vector<Prediction> predict_subjects(const EmbeddingModel& model, std::string_view predicate,
                                                std::string_view object, std::size_t top_k) {
  const Triad q{0, model.relations().id(canonicalize_label(predicate)),
                model.entities().id(canonicalize_label(object))};
  return detail::top_candidates(model, q, Side::Subject, top_k);
}

// ---------------------------------------------------------------------------
// Cross validation

struct CvSummary {
  Metrics mean;
  Metrics stddev;  // sample standard deviation (n - 1)
};

inline CvSummary summarize(std::span<const EvalReport> reports) {
  CvSummary s;
  const auto n = static_cast<double>(reports.size());
  if (reports.empty()) return s;
  for (const auto& r : reports) {
    s.mean.mrr += r.metrics.mrr / n;
    s.mean.hits1 += r.metrics.hits1 / n;
    s.mean.hits10 += r.metrics.hits10 / n;
  }
  if (reports.size() < 2) return s;
  for (const auto& r : reports) {
    s.stddev.mrr += std::pow(r.metrics.mrr - s.mean.mrr, 2);
    s.stddev.hits1 += std::pow(r.metrics.hits1 - s.mean.hits1, 2);
    s.stddev.hits10 += std::pow(r.metrics.hits10 - s.mean.hits10, 2);
  }
  s.stddev.mrr = std::sqrt(s.stddev.mrr / (n - 1));
  s.stddev.hits1 = std::sqrt(s.stddev.hits1 / (n - 1));
  s.stddev.hits10 = std::sqrt(s.stddev.hits10 / (n - 1));
  return s;
}

struct CvResult {
  std::vector<EvalReport> folds;
  std::vector<TrainTrace> traces;
  std::vector<std::size_t> fold_test_sizes;
  CvSummary summary;
};

struct CvOptions {
  RepairMode repair = RepairMode::MoveToTrain;
  unsigned threads = 1;
  /// Called with each fold's freshly initialised model before training; may
  /// modify it and returns the options for that fold's training run.
  std::function<TrainOptions(EmbeddingModel&, const KnowledgeGraph& train)> prepare;
};

/// One model per fold, trained on the fold's train split and evaluated on its
/// test split with the whole graph as the known-triple set. Folds may run in
/// parallel; each is deterministic, so the result does not depend on `threads`.
inline CvResult cross_validate(const KnowledgeGraph& graph, const ModelConfig& config, std::size_t k,
                               Protocol protocol, const CvOptions& options = {}) {
  config.validate();
  auto folds = split_kfold(graph, k, config.seed, options.repair);
  CvResult result;
  result.folds.resize(folds.size());
  result.traces.resize(folds.size());
  for (const auto& f : folds) result.fold_test_sizes.push_back(f.test_before_repair);

  std::vector<std::exception_ptr> errors(folds.size());
  detail::parallel_for(folds.size(), options.threads, [&](std::size_t i) {
    try {
      if (folds[i].test.empty()) throw EmptyGraphError("fold " + std::to_string(i) + " has an empty test set after repair");
      auto model = init_model(config, folds[i].train);
      TrainOptions fold_options;
      if (options.prepare) fold_options = options.prepare(model, folds[i].train);
      auto trained = train_from(std::move(model), folds[i].train, fold_options);
      const KnowledgeGraph* known[] = {&graph};
      result.folds[i] = evaluate(trained.model, folds[i].test, known, protocol);
      result.traces[i] = std::move(trained.trace);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  result.summary = summarize(result.folds);
  return result;
}

// ---------------------------------------------------------------------------
// Comparison table

struct ComparisonRow {
  std::string group;  // e.g. "Variation 3" or a baseline name
  std::string model;  // e.g. "ComplEx"
  Metrics metrics;
};

/// Baselines file: JSON list of {name, mrr, hits10, hits1} with optional "model".
inline std::vector<ComparisonRow> parse_baselines(const nlohmann::json& j) {
  if (!j.is_array()) throw ConsistencyError("baselines JSON must be a list");
  std::vector<ComparisonRow> rows;
  for (const auto& e : j) {
    try {
      rows.push_back({e.at("name").get<std::string>(), e.value("model", std::string{}),
                      {e.at("mrr").get<double>(), e.at("hits1").get<double>(), e.at("hits10").get<double>()}});
    } catch (const nlohmann::json::exception& ex) {
      throw ConsistencyError(std::string("baselines entry: ") + ex.what());
    }
  }
  return rows;
}

/// Aligned table with columns MRR, Hits@10, Hits@1; the group label is
/// printed only on the first row of each run of equal groups.
inline std::string render_comparison_table(std::span<const ComparisonRow> rows) {
  std::size_t gw = 6, mw = 5;
  for (const auto& r : rows) {
    gw = std::max(gw, r.group.size());
    mw = std::max(mw, r.model.size());
  }
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(gw) + 2) << "Models" << std::setw(static_cast<int>(mw) + 2) << ""
     << std::right << std::setw(6) << "MRR" << std::setw(9) << "Hits@10" << std::setw(8) << "Hits@1" << '\n';
  const std::string* prev = nullptr;
  for (const auto& r : rows) {
    const bool same = prev != nullptr && *prev == r.group;
    os << std::left << std::setw(static_cast<int>(gw) + 2) << (same ? "" : r.group)
       << std::setw(static_cast<int>(mw) + 2) << r.model << std::right << std::fixed << std::setprecision(2)
       << std::setw(6) << r.metrics.mrr << std::setw(9) << r.metrics.hits10 << std::setw(8) << r.metrics.hits1
       << '\n';
    prev = &r.group;
  }
  return os.str();
}

inline nlohmann::json to_json(std::span<const ComparisonRow> rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"group", r.group},
                   {"model", r.model},
                   {"mrr", r.metrics.mrr},
                   {"hits10", r.metrics.hits10},
                   {"hits1", r.metrics.hits1}});
  return arr;
}

}  // namespace kge
