#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kge/config.hpp"
#include "kge/evaluator.hpp"
#include "kge/fusion.hpp"
#include "kge/graph.hpp"
#include "kge/ontology.hpp"
#include "kge/split.hpp"
#include "kge/trainer.hpp"

// Glue shared by the CLI subcommands: dataset assembly for a variation, hint
// application, and the holdout experiment.

namespace kge {

struct PreparedDataset {
  KnowledgeGraph graph;
  std::optional<InitHints> hints;
  VariationResult variation;  // counters; its graph is moved into `graph`
  nlohmann::json inputs;      // path -> content hash
};

inline TokenVectorSource token_source_for(const RunConfig& cfg) {
  const auto dim = static_cast<std::size_t>(cfg.model.k);
  const auto vectors = cfg.path("vectors");
  return vectors.empty() ? TokenVectorSource::seeded(dim, cfg.model.seed)
                         : TokenVectorSource::from_file(vectors, dim);
}

inline nlohmann::json input_hash(const std::string& path) {
  return {{"path", path}, {"fnv1a64", file_hash(path)}};
}

/// Loads the triples file and, for variations 2 and 3, the lexicon and sentences.
inline PreparedDataset prepare_dataset(const RunConfig& cfg, int variation) {
  PreparedDataset d;
  const auto triples = cfg.require_path("triples");
  d.inputs["triples"] = input_hash(triples);
  auto base = load_triples(triples).graph;
  if (variation == 1) {
    d.graph = std::move(base);
    return d;
  }
  const auto lex_path = cfg.require_path("lexicon");
  const auto sent_path = cfg.require_path("sentences");
  d.inputs["lexicon"] = input_hash(lex_path);
  d.inputs["sentences"] = input_hash(sent_path);
  const auto lexicon = load_lexicon(lex_path);
  const auto sentences = load_sentences(sent_path);

  std::optional<TokenVectorSource> tokens;
  VariationOptions opts;
  opts.pool = cfg.pool;
  if (variation == 3) {
    if (!cfg.path("vectors").empty()) d.inputs["vectors"] = input_hash(cfg.path("vectors"));
    tokens = token_source_for(cfg);
    opts.tokens = &*tokens;
  }
  d.variation = build_variation(base, sentences.records, lexicon, variation, opts);
  d.graph = std::move(d.variation.graph);
  d.hints = d.variation.hints;
  return d;
}

/// Keeps only hints whose entity the model knows (a split may leave some out).
inline InitHints hints_for(const EmbeddingModel& model, const InitHints& hints) {
  InitHints out;
  for (const auto& h : hints.rows)
    if (model.entities().contains(h.first)) out.rows.push_back(h);
  return out;
}

/// Applies the hints to a freshly initialised model and returns the matching
/// training options (hinted rows frozen when requested).
inline TrainOptions prepare_model(EmbeddingModel& model, const std::optional<InitHints>& hints,
                                  bool freeze) {
  TrainOptions opts;
  if (!hints || hints->empty()) return opts;
  const auto usable = hints_for(model, *hints);
  model = apply_init_hints(std::move(model), usable);
  if (freeze) opts.frozen_entities = hinted_entities(model, usable);
  return opts;
}

inline TrainResult train_dataset(const KnowledgeGraph& graph, const std::optional<InitHints>& hints,
                                 const RunConfig& cfg) {
  auto model = init_model(cfg.model, graph);
  const auto opts = prepare_model(model, hints, cfg.freeze_hints);
  return train_from(std::move(model), graph, opts);
}

struct HoldoutOutcome {
  SplitResult split;
  TrainTrace trace;
  EvalReport report;
};

/// Split by cfg.train_fraction, train on train, evaluate on test with the
/// full graph as known triples.
inline HoldoutOutcome run_holdout(const KnowledgeGraph& graph, const std::optional<InitHints>& hints,
                                  const RunConfig& cfg) {
  HoldoutOutcome out;
  out.split = split_holdout(graph, cfg.train_fraction, cfg.model.seed, cfg.repair);
  if (out.split.test.empty()) throw EmptyGraphError("holdout test split is empty after repair");
  auto trained = train_dataset(out.split.train, hints, cfg);
  const KnowledgeGraph* known[] = {&graph};
  out.report = evaluate(trained.model, out.split.test, known, cfg.protocol, cfg.threads);
  out.report.config = to_json(cfg);
  out.trace = std::move(trained.trace);
  return out;
}

inline CvResult run_cv(const KnowledgeGraph& graph, const std::optional<InitHints>& hints,
                       const RunConfig& cfg) {
  CvOptions opts;
  opts.repair = cfg.repair;
  opts.threads = cfg.threads;
  opts.prepare = [&](EmbeddingModel& model, const KnowledgeGraph&) {
    return prepare_model(model, hints, cfg.freeze_hints);
  };
  auto r = cross_validate(graph, cfg.model, static_cast<std::size_t>(cfg.cv_k), cfg.protocol, opts);
  for (auto& f : r.folds) f.config = to_json(cfg);
  return r;
}

}  // namespace kge
