#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kge/error.hpp"
#include "kge/graph.hpp"
#include "kge/random.hpp"

namespace kge {

enum class Family : std::uint32_t { TransE = 1, ComplEx = 2 };
enum class LossKind : std::uint32_t { Pairwise = 1, MulticlassNll = 2 };
enum class Norm : std::uint32_t { L1 = 1, L2 = 2 };

inline std::string to_string(Family f) { return f == Family::TransE ? "transe" : "complex"; }
inline std::string to_string(LossKind l) {
  return l == LossKind::Pairwise ? "pairwise" : "multiclass-nll";
}
inline std::string to_string(Norm n) { return n == Norm::L1 ? "l1" : "l2"; }

inline Family parse_family(std::string_view s) {
  const auto v = canonicalize_label(s);
  if (v == "transe") return Family::TransE;
  if (v == "complex") return Family::ComplEx;
  throw ConfigError("family", "expected transe or complex, got '" + std::string(s) + "'");
}

inline LossKind parse_loss(std::string_view s) {
  const auto v = canonicalize_label(s);
  if (v == "pairwise") return LossKind::Pairwise;
  if (v == "multiclass-nll" || v == "multiclass_nll") return LossKind::MulticlassNll;
  throw ConfigError("loss", "expected pairwise or multiclass-nll, got '" + std::string(s) + "'");
}

inline Norm parse_norm(std::string_view s) {
  const auto v = canonicalize_label(s);
  if (v == "l1" || v == "1") return Norm::L1;
  if (v == "l2" || v == "2") return Norm::L2;
  throw ConfigError("norm", "expected l1 or l2, got '" + std::string(s) + "'");
}

/// Model and optimisation hyperparameters. Defaults follow the reference
/// toolkit settings: k=150, eta=10, epochs=10, batches_count=100, seed=555.
struct ModelConfig {
  Family family = Family::ComplEx;
  int k = 150;
  int eta = 10;
  int epochs = 10;
  int batches_count = 100;
  std::uint64_t seed = 555;
  std::optional<LossKind> loss;  // unset: multiclass-nll for ComplEx, pairwise for TransE
  double margin = 1.0;
  double learning_rate = 5e-4;
  Norm norm = Norm::L2;  // TransE distance

  LossKind effective_loss() const {
    if (loss) return *loss;
    return family == Family::ComplEx ? LossKind::MulticlassNll : LossKind::Pairwise;
  }

  /// Columns per embedding row: k for TransE, 2k (real | imaginary) for ComplEx.
  std::size_t width() const {
    return static_cast<std::size_t>(k) * (family == Family::ComplEx ? 2 : 1);
  }

  void validate() const {
    if (k <= 0) throw ConfigError("k", "must be positive");
    if (eta <= 0) throw ConfigError("eta", "must be positive");
    if (epochs <= 0) throw ConfigError("epochs", "must be positive");
    if (batches_count <= 0) throw ConfigError("batches_count", "must be positive");
    if (!(margin >= 0.0) || !std::isfinite(margin))
      throw ConfigError("margin", "must be a finite nonnegative number");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("learning_rate", "must be a finite positive number");
  }
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"family", to_string(c.family)},
          {"k", c.k},
          {"eta", c.eta},
          {"epochs", c.epochs},
          {"batches_count", c.batches_count},
          {"seed", c.seed},
          {"loss", to_string(c.effective_loss())},
          {"margin", c.margin},
          {"learning_rate", c.learning_rate},
          {"norm", to_string(c.norm)}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.family = parse_family(j.at("family").get<std::string>());
  c.k = j.at("k").get<int>();
  c.eta = j.at("eta").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.batches_count = j.at("batches_count").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.loss = parse_loss(j.at("loss").get<std::string>());
  c.margin = j.at("margin").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.norm = parse_norm(j.at("norm").get<std::string>());
  return c;
}

/// Row-major float table.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

  std::span<float> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

/// Entity and relation tables for one scoring family, with the vocabularies
/// they were trained on so ids stay stable across save/load.
class EmbeddingModel {
 public:
  EmbeddingModel(ModelConfig config, Vocabulary entities, Vocabulary relations)
      : config_(config),
        entities_(std::move(entities)),
        relations_(std::move(relations)),
        entity_table_(entities_.size(), config.width()),
        relation_table_(relations_.size(), config.width()) {}

  const ModelConfig& config() const noexcept { return config_; }
  Family family() const noexcept { return config_.family; }
  const Vocabulary& entities() const noexcept { return entities_; }
  const Vocabulary& relations() const noexcept { return relations_; }
  std::size_t entity_count() const noexcept { return entities_.size(); }
  std::size_t relation_count() const noexcept { return relations_.size(); }
  std::size_t width() const noexcept { return entity_table_.cols; }

  Matrix& entity_table() noexcept { return entity_table_; }
  Matrix& relation_table() noexcept { return relation_table_; }
  const Matrix& entity_table() const noexcept { return entity_table_; }
  const Matrix& relation_table() const noexcept { return relation_table_; }

  std::span<const float> entity(std::uint32_t id) const {
    if (id >= entity_count()) throw LookupError("entity id " + std::to_string(id) + " out of range");
    return entity_table_.row(id);
  }
  std::span<const float> relation(std::uint32_t id) const {
    if (id >= relation_count())
      throw LookupError("relation id " + std::to_string(id) + " out of range");
    return relation_table_.row(id);
  }

  Triad triad_of(const Triple& t) const {
    return {entities_.id(t.subject), relations_.id(t.predicate), entities_.id(t.object)};
  }

  bool all_finite() const {
    for (float v : entity_table_.data)
      if (!std::isfinite(v)) return false;
    for (float v : relation_table_.data)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  ModelConfig config_;
  Vocabulary entities_;
  Vocabulary relations_;
  Matrix entity_table_;
  Matrix relation_table_;
};

namespace detail {

inline void glorot_fill(Matrix& m, RandomStream rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
  for (auto& v : m.data) v = static_cast<float>(rng.uniform(-limit, limit));
}

}  // namespace detail

/// Glorot-uniform tables drawn from streams keyed by config.seed.
inline EmbeddingModel init_model(const ModelConfig& config, const KnowledgeGraph& graph) {
  config.validate();
  if (graph.empty()) throw EmptyGraphError("cannot initialise a model on an empty graph");
  EmbeddingModel model(config, graph.entities(), graph.relations());
  detail::glorot_fill(model.entity_table(), RandomStream::derive(config.seed, "init.entities"));
  detail::glorot_fill(model.relation_table(), RandomStream::derive(config.seed, "init.relations"));
  return model;
}

// ---------------------------------------------------------------------------
// Scoring kernels. Templated on the parameter type so the gradient checker can
// evaluate them on double copies; accumulation is always in double.

template <class T>
double transe_kernel(std::span<const T> s, std::span<const T> r, std::span<const T> o, Norm norm) {
  double acc = 0.0;
  if (norm == Norm::L2) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double d = static_cast<double>(s[j]) + static_cast<double>(r[j]) - static_cast<double>(o[j]);
      acc += d * d;
    }
    return -std::sqrt(acc);
  }
  for (std::size_t j = 0; j < s.size(); ++j)
    acc += std::abs(static_cast<double>(s[j]) + static_cast<double>(r[j]) - static_cast<double>(o[j]));
  return -acc;
}

/// Re(sum_j s_j * r_j * conj(o_j)); rows are [real parts | imaginary parts].
template <class T>
double complex_kernel(std::span<const T> s, std::span<const T> r, std::span<const T> o) {
  const std::size_t k = s.size() / 2;
  double acc = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double a = s[j], b = s[k + j];
    const double c = r[j], d = r[k + j];
    const double e = o[j], f = o[k + j];
    const double re = a * c - b * d;
    const double im = a * d + b * c;
    acc += re * e + im * f;
  }
  return acc;
}

/// Adds upstream * d(score)/d(param) into gs, gr, go.
template <class T>
void transe_kernel_grad(std::span<const T> s, std::span<const T> r, std::span<const T> o, Norm norm,
                        double upstream, std::span<double> gs, std::span<double> gr,
                        std::span<double> go) {
  const std::size_t n = s.size();
  if (norm == Norm::L2) {
    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = static_cast<double>(s[j]) + static_cast<double>(r[j]) - static_cast<double>(o[j]);
      sq += d * d;
    }
    const double dist = std::sqrt(sq);
    if (dist == 0.0) return;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = static_cast<double>(s[j]) + static_cast<double>(r[j]) - static_cast<double>(o[j]);
      const double g = -upstream * d / dist;
      gs[j] += g;
      gr[j] += g;
      go[j] -= g;
    }
    return;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double d = static_cast<double>(s[j]) + static_cast<double>(r[j]) - static_cast<double>(o[j]);
    const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    const double g = -upstream * sign;
    gs[j] += g;
    gr[j] += g;
    go[j] -= g;
  }
}

template <class T>
void complex_kernel_grad(std::span<const T> s, std::span<const T> r, std::span<const T> o,
                         double upstream, std::span<double> gs, std::span<double> gr,
                         std::span<double> go) {
  const std::size_t k = s.size() / 2;
  for (std::size_t j = 0; j < k; ++j) {
    const double a = s[j], b = s[k + j];
    const double c = r[j], d = r[k + j];
    const double e = o[j], f = o[k + j];
    gs[j] += upstream * (c * e + d * f);
    gs[k + j] += upstream * (c * f - d * e);
    gr[j] += upstream * (a * e + b * f);
    gr[k + j] += upstream * (a * f - b * e);
    go[j] += upstream * (a * c - b * d);
    go[k + j] += upstream * (a * d + b * c);
  }
}

// ---------------------------------------------------------------------------

namespace detail {

inline void check_ids(const EmbeddingModel& m, const Triad& t) {
  if (t.s >= m.entity_count() || t.o >= m.entity_count())
    throw LookupError("entity id out of range in triad (" + std::to_string(t.s) + ", " +
                      std::to_string(t.p) + ", " + std::to_string(t.o) + ")");
  if (t.p >= m.relation_count())
    throw LookupError("relation id " + std::to_string(t.p) + " out of range");
}

// No range checks; callers validate.
inline double score_unchecked(const EmbeddingModel& m, const Triad& t) {
  const auto s = m.entity_table().row(t.s);
  const auto r = m.relation_table().row(t.p);
  const auto o = m.entity_table().row(t.o);
  return m.family() == Family::TransE ? transe_kernel(s, r, o, m.config().norm)
                                      : complex_kernel(s, r, o);
}

}  // namespace detail

/// Negated distance -||e_s + r_p - e_o||; 0 is the maximum.
inline double score_transe(const EmbeddingModel& m, std::uint32_t s, std::uint32_t p, std::uint32_t o) {
  if (m.family() != Family::TransE) throw ConfigError("family", "model is not TransE");
  detail::check_ids(m, {s, p, o});
  return transe_kernel(m.entity_table().row(s), m.relation_table().row(p), m.entity_table().row(o),
                       m.config().norm);
}

inline double score_complex(const EmbeddingModel& m, std::uint32_t s, std::uint32_t p, std::uint32_t o) {
  if (m.family() != Family::ComplEx) throw ConfigError("family", "model is not ComplEx");
  detail::check_ids(m, {s, p, o});
  return complex_kernel(m.entity_table().row(s), m.relation_table().row(p), m.entity_table().row(o));
}

/// Plausibility of a triad under the model's family; higher is more plausible.
inline double score(const EmbeddingModel& m, const Triad& t) {
  detail::check_ids(m, t);
  return detail::score_unchecked(m, t);
}

inline std::vector<double> score_batch(const EmbeddingModel& m, std::span<const Triad> triads) {
  for (const auto& t : triads) detail::check_ids(m, t);
  std::vector<double> out(triads.size());
  for (std::size_t i = 0; i < triads.size(); ++i) out[i] = detail::score_unchecked(m, triads[i]);
  return out;
}

}  // namespace kge
