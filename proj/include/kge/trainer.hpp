#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kge/checkpoint.hpp"
#include "kge/error.hpp"
#include "kge/graph.hpp"
#include "kge/loss.hpp"
#include "kge/model.hpp"
#include "kge/random.hpp"

namespace kge {

/// Negatives for a list of positives: negatives[i*eta + j] corrupts positives[i].
struct CorruptionBatch {
  std::vector<Triad> positives;
  std::vector<Triad> negatives;
  std::vector<Side> corrupted_side;
  std::size_t eta = 0;

  std::span<const Triad> negatives_of(std::size_t i) const {
    return std::span<const Triad>(negatives).subspan(i * eta, eta);
  }
};

inline constexpr int kCorruptionRetries = 8;

/// Replaces subject or object (fair coin per negative) with an entity drawn
/// uniformly from [0, entity_count). A draw that reproduces the positive is
/// retried, and after kCorruptionRetries the next id (mod entity_count) is used.
inline CorruptionBatch sample_corruptions(std::span<const Triad> positives, int eta,
                                          std::size_t entity_count, RandomStream& rng) {
  if (eta < 1) throw ConfigError("eta", "must be at least 1");
  if (entity_count < 2) throw ConsistencyError("cannot corrupt: fewer than 2 entities");

  CorruptionBatch b;
  b.eta = static_cast<std::size_t>(eta);
  b.positives.assign(positives.begin(), positives.end());
  b.negatives.reserve(positives.size() * b.eta);
  b.corrupted_side.reserve(positives.size() * b.eta);
  for (const auto& pos : positives) {
    for (int j = 0; j < eta; ++j) {
      const Side side = (rng.next() >> 63) != 0 ? Side::Subject : Side::Object;
      const std::uint32_t original = side == Side::Subject ? pos.s : pos.o;
      auto e = static_cast<std::uint32_t>(rng.uniform_index(entity_count));
      for (int retry = 0; e == original && retry < kCorruptionRetries; ++retry)
        e = static_cast<std::uint32_t>(rng.uniform_index(entity_count));
      if (e == original) e = static_cast<std::uint32_t>((e + 1) % entity_count);
      Triad neg = pos;
      (side == Side::Subject ? neg.s : neg.o) = e;
      b.negatives.push_back(neg);
      b.corrupted_side.push_back(side);
    }
  }
  return b;
}

namespace detail {

// Dense gradient buffer that remembers which rows were written.
class RowGradients {
 public:
  RowGradients(std::size_t rows, std::size_t width)
      : width_(width), values_(rows * width, 0.0), touched_(rows, false) {}

  std::span<double> row(std::uint32_t id) {
    if (!touched_[id]) {
      touched_[id] = true;
      ids_.push_back(id);
    }
    return {values_.data() + static_cast<std::size_t>(id) * width_, width_};
  }

  std::span<const double> peek(std::uint32_t id) const {
    return {values_.data() + static_cast<std::size_t>(id) * width_, width_};
  }

  const std::vector<std::uint32_t>& ids() const noexcept { return ids_; }

  void clear() {
    for (auto id : ids_) {
      std::fill_n(values_.begin() + static_cast<std::ptrdiff_t>(id * width_), width_, 0.0);
      touched_[id] = false;
    }
    ids_.clear();
  }

 private:
  std::size_t width_;
  std::vector<double> values_;
  std::vector<bool> touched_;
  std::vector<std::uint32_t> ids_;
};

template <class Table>
void accumulate_triad_grad(const EmbeddingModel& m, const Table& ent, const Table& rel,
                           const Triad& t, double upstream, RowGradients& ge, RowGradients& gr) {
  if (upstream == 0.0) return;
  auto gs = ge.row(t.s);
  auto go = ge.row(t.o);
  auto grr = gr.row(t.p);
  if (m.family() == Family::TransE)
    transe_kernel_grad(ent.row(t.s), rel.row(t.p), ent.row(t.o), m.config().norm, upstream, gs, grr, go);
  else
    complex_kernel_grad(ent.row(t.s), rel.row(t.p), ent.row(t.o), upstream, gs, grr, go);
}

}  // namespace detail

struct AdamSettings {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam over one table that only updates rows present in the gradient.
class LazyAdam {
 public:
  LazyAdam(std::size_t rows, std::size_t width, AdamSettings s)
      : s_(s), width_(width), m_(rows * width, 0.0), v_(rows * width, 0.0) {}

  /// `step` is the 1-based global update count used for bias correction.
  void apply(Matrix& table, const detail::RowGradients& grads, std::uint64_t step,
             const std::vector<bool>* frozen = nullptr) {
    const double c1 = 1.0 - std::pow(s_.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(s_.beta2, static_cast<double>(step));
    for (auto id : grads.ids()) {
      if (frozen != nullptr && (*frozen)[id]) continue;
      const auto g = grads.peek(id);
      auto x = table.row(id);
      const std::size_t base = static_cast<std::size_t>(id) * width_;
      for (std::size_t j = 0; j < width_; ++j) {
        double& m = m_[base + j];
        double& v = v_[base + j];
        m = s_.beta1 * m + (1.0 - s_.beta1) * g[j];
        v = s_.beta2 * v + (1.0 - s_.beta2) * g[j] * g[j];
        const double update = s_.learning_rate * (m / c1) / (std::sqrt(v / c2) + s_.epsilon);
        x[j] = static_cast<float>(static_cast<double>(x[j]) - update);
      }
    }
  }

 private:
  AdamSettings s_;
  std::size_t width_;
  std::vector<double> m_;
  std::vector<double> v_;
};

struct TrainTrace {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_seconds;
  std::vector<std::size_t> epoch_corruptions;
  std::string model_checksum;
};

inline nlohmann::json to_json(const TrainTrace& t) {
  return {{"epoch_loss", t.epoch_loss},
          {"epoch_seconds", t.epoch_seconds},
          {"epoch_corruptions", t.epoch_corruptions},
          {"model_checksum", t.model_checksum}};
}

struct BatchInfo {
  int epoch = 0;
  int batch = 0;
  double loss = 0.0;
  const EmbeddingModel* model = nullptr;
  std::span<const std::uint32_t> updated_entities;
};

struct TrainOptions {
  /// Entity rows that keep their initial values.
  std::vector<std::uint32_t> frozen_entities;
  std::function<void(const BatchInfo&)> on_batch;
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

struct TrainResult {
  EmbeddingModel model;
  TrainTrace trace;
};

/// Continues optimising `model` on `graph`, whose vocabularies must match the model's.
inline TrainResult train_from(EmbeddingModel model, const KnowledgeGraph& graph,
                              const TrainOptions& options = {}) {
  const ModelConfig& cfg = model.config();
  cfg.validate();
  if (graph.empty()) throw EmptyGraphError("cannot train on an empty graph");
  if (!(model.entities() == graph.entities()) || !(model.relations() == graph.relations()))
    throw ConsistencyError("model vocabulary does not match the training graph");
  if (static_cast<std::size_t>(cfg.batches_count) > graph.size())
    throw ConfigError("batches_count", std::to_string(cfg.batches_count) + " exceeds triple count " +
                                           std::to_string(graph.size()));

  const auto n_ent = model.entity_count();
  const auto width = model.width();
  const LossKind loss_kind = cfg.effective_loss();
  const AdamSettings adam{cfg.learning_rate};
  LazyAdam ent_opt(n_ent, width, adam);
  LazyAdam rel_opt(model.relation_count(), width, adam);
  detail::RowGradients ent_grad(n_ent, width);
  detail::RowGradients rel_grad(model.relation_count(), width);

  std::vector<bool> frozen(n_ent, false);
  for (auto id : options.frozen_entities) {
    if (id >= n_ent) throw LookupError("frozen entity id out of range");
    frozen[id] = true;
  }

  std::vector<Triad> order(graph.triads().begin(), graph.triads().end());
  const auto batch_sizes = [&] {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(cfg.batches_count), order.size() / cfg.batches_count);
    for (std::size_t i = 0; i < order.size() % cfg.batches_count; ++i) ++sizes[i];
    return sizes;
  }();

  TrainTrace trace;
  std::vector<double> pos_scores, neg_scores, dpos, dneg;
  std::vector<std::uint32_t> updated;
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    auto shuffle_rng = RandomStream::derive(cfg.seed, "train.shuffle", static_cast<std::uint64_t>(epoch));
    shuffle(std::span<Triad>(order), shuffle_rng);

    double epoch_loss = 0.0;
    std::size_t corruptions = 0;
    std::size_t begin = 0;
    for (int b = 0; b < cfg.batches_count; ++b) {
      const auto positives = std::span<const Triad>(order).subspan(begin, batch_sizes[static_cast<std::size_t>(b)]);
      begin += positives.size();

      auto rng = RandomStream::derive(cfg.seed, "train.corrupt", static_cast<std::uint64_t>(epoch),
                                      static_cast<std::uint64_t>(b));
      const auto batch = sample_corruptions(positives, cfg.eta, n_ent, rng);
      corruptions += batch.negatives.size();

      pos_scores.resize(positives.size());
      neg_scores.resize(batch.negatives.size());
      for (std::size_t i = 0; i < positives.size(); ++i)
        pos_scores[i] = detail::score_unchecked(model, positives[i]);
      for (std::size_t i = 0; i < batch.negatives.size(); ++i)
        neg_scores[i] = detail::score_unchecked(model, batch.negatives[i]);

      dpos.resize(pos_scores.size());
      dneg.resize(neg_scores.size());
      const double loss = loss_with_score_grad(loss_kind, pos_scores, neg_scores, cfg.margin, dpos, dneg);
      epoch_loss += loss * static_cast<double>(positives.size());

      ent_grad.clear();
      rel_grad.clear();
      const auto& ent = model.entity_table();
      const auto& rel = model.relation_table();
      for (std::size_t i = 0; i < positives.size(); ++i)
        detail::accumulate_triad_grad(model, ent, rel, positives[i], dpos[i], ent_grad, rel_grad);
      for (std::size_t i = 0; i < batch.negatives.size(); ++i)
        detail::accumulate_triad_grad(model, ent, rel, batch.negatives[i], dneg[i], ent_grad, rel_grad);

      ++step;
      ent_opt.apply(model.entity_table(), ent_grad, step, &frozen);
      rel_opt.apply(model.relation_table(), rel_grad, step);

      updated.clear();
      for (auto id : ent_grad.ids())
        if (!frozen[id]) updated.push_back(id);

      if (model.family() == Family::TransE) {
        for (auto id : updated) {
          auto row = model.entity_table().row(id);
          double sq = 0.0;
          for (float v : row) sq += static_cast<double>(v) * v;
          if (sq == 0.0) continue;
          const double inv = 1.0 / std::sqrt(sq);
          for (auto& v : row) v = static_cast<float>(v * inv);
        }
      }

      if (options.on_batch) options.on_batch({epoch, b, loss, &model, updated});
    }

    trace.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    trace.epoch_corruptions.push_back(corruptions);
    trace.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (options.on_epoch) options.on_epoch(epoch, trace.epoch_loss.back());
  }

  trace.model_checksum = model_checksum(model);
  return {std::move(model), std::move(trace)};
}

/// init_model followed by train_from. Fully determined by (graph, config).
inline TrainResult train(const KnowledgeGraph& graph, const ModelConfig& config,
                         const TrainOptions& options = {}) {
  return train_from(init_model(config, graph), graph, options);
}

// ---------------------------------------------------------------------------
// Finite-difference validation of the analytic gradients.

/// Analytic d(loss)/d(parameter) for one positive and its negatives, keyed by row id.
struct GradientMap {
  std::map<std::uint32_t, std::vector<double>> entities;
  std::map<std::uint32_t, std::vector<double>> relations;
};

namespace detail {

// Double-precision copies of the rows a positive and its negatives touch.
struct RowCopies {
  std::map<std::uint32_t, std::vector<double>> ent;
  std::map<std::uint32_t, std::vector<double>> rel;

  RowCopies(const EmbeddingModel& m, const Triad& pos, std::span<const Triad> negs) {
    auto take = [&](const Triad& t) {
      for (auto id : {t.s, t.o}) {
        const auto r = m.entity(id);
        ent.try_emplace(id, r.begin(), r.end());
      }
      const auto r = m.relation(t.p);
      rel.try_emplace(t.p, r.begin(), r.end());
    };
    take(pos);
    for (const auto& t : negs) take(t);
  }

  double score(const EmbeddingModel& m, const Triad& t) const {
    const std::span<const double> s = ent.at(t.s), r = rel.at(t.p), o = ent.at(t.o);
    return m.family() == Family::TransE ? transe_kernel(s, r, o, m.config().norm)
                                        : complex_kernel(s, r, o);
  }

  double loss(const EmbeddingModel& m, const Triad& pos, std::span<const Triad> negs,
              LossKind kind) const {
    const double ps = score(m, pos);
    std::vector<double> ns;
    ns.reserve(negs.size());
    for (const auto& t : negs) ns.push_back(score(m, t));
    return kind == LossKind::Pairwise ? loss_pairwise(std::span<const double>(&ps, 1), ns, m.config().margin)
                                      : loss_multiclass_nll(ps, ns);
  }
};

}  // namespace detail

inline GradientMap analytic_gradient(const EmbeddingModel& m, const Triad& pos,
                                     std::span<const Triad> negs, LossKind kind) {
  detail::check_ids(m, pos);
  for (const auto& t : negs) detail::check_ids(m, t);
  const double ps = detail::score_unchecked(m, pos);
  std::vector<double> ns;
  for (const auto& t : negs) ns.push_back(detail::score_unchecked(m, t));
  double dp = 0.0;
  std::vector<double> dn(ns.size());
  loss_with_score_grad(kind, std::span<const double>(&ps, 1), ns, m.config().margin,
                       std::span<double>(&dp, 1), dn);

  detail::RowGradients ge(m.entity_count(), m.width());
  detail::RowGradients gr(m.relation_count(), m.width());
  // Touch every involved row so zero gradients are reported explicitly.
  for (const auto* t : {&pos}) {
    ge.row(t->s);
    ge.row(t->o);
    gr.row(t->p);
  }
  for (const auto& t : negs) {
    ge.row(t.s);
    ge.row(t.o);
    gr.row(t.p);
  }
  detail::accumulate_triad_grad(m, m.entity_table(), m.relation_table(), pos, dp, ge, gr);
  for (std::size_t i = 0; i < negs.size(); ++i)
    detail::accumulate_triad_grad(m, m.entity_table(), m.relation_table(), negs[i], dn[i], ge, gr);

  GradientMap out;
  for (auto id : ge.ids()) out.entities.emplace(id, std::vector<double>(ge.peek(id).begin(), ge.peek(id).end()));
  for (auto id : gr.ids()) out.relations.emplace(id, std::vector<double>(gr.peek(id).begin(), gr.peek(id).end()));
  return out;
}

struct GradientCheckResult {
  double max_relative_error = 0.0;
  double max_abs_gradient = 0.0;
  std::size_t parameters_checked = 0;
};

/// Compares analytic_gradient against central differences on double copies
/// of every touched parameter. Relative error is |a - n| / max(|a|, |n|, 1e-6).
inline GradientCheckResult gradient_check(const EmbeddingModel& m, const Triad& pos,
                                          std::span<const Triad> negs, LossKind kind, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
  const auto analytic = analytic_gradient(m, pos, negs, kind);
  detail::RowCopies rows(m, pos, negs);

  GradientCheckResult r;
  auto check_table = [&](std::map<std::uint32_t, std::vector<double>>& table,
                         const std::map<std::uint32_t, std::vector<double>>& grads) {
    for (auto& [id, values] : table) {
      const auto& g = grads.at(id);
      for (std::size_t j = 0; j < values.size(); ++j) {
        const double saved = values[j];
        values[j] = saved + epsilon;
        const double up = rows.loss(m, pos, negs, kind);
        values[j] = saved - epsilon;
        const double down = rows.loss(m, pos, negs, kind);
        values[j] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom = std::max({std::abs(g[j]), std::abs(numeric), 1e-6});
        r.max_relative_error = std::max(r.max_relative_error, std::abs(g[j] - numeric) / denom);
        r.max_abs_gradient = std::max(r.max_abs_gradient, std::abs(g[j]));
        ++r.parameters_checked;
      }
    }
  };
  check_table(rows.ent, analytic.entities);
  check_table(rows.rel, analytic.relations);
  return r;
}

/// Draws eta corruptions of `pos` (config.eta of the model) and checks them.
inline GradientCheckResult gradient_check(const EmbeddingModel& m, const Triad& pos, LossKind kind,
                                          double epsilon, std::uint64_t seed = 0) {
  auto rng = RandomStream::derive(seed, "gradient_check");
  const auto batch = sample_corruptions(std::span<const Triad>(&pos, 1), m.config().eta, m.entity_count(), rng);
  return gradient_check(m, pos, batch.negatives, kind, epsilon);
}

}  // namespace kge
