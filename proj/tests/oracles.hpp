#pragma once

// Reference computations used only by the tests. Each one takes a different
// route from the library code it checks (sorting instead of counting, long
// double sums instead of shifted log-sum-exp, std::map tallies, ...).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kge/evaluator.hpp"
#include "kge/graph.hpp"
#include "kge/model.hpp"
#include "kge/random.hpp"

namespace kge::oracle {

/// Scores every admissible candidate, sorts descending with the true entity
/// placed after any equal scores, and returns its 1-based position.
inline std::uint32_t brute_force_rank(const EmbeddingModel& m, const Triad& truth, Side side,
                                      Protocol protocol, const TriadSet& known) {
  struct Cand {
    double score;
    bool is_truth;
  };
  std::vector<Cand> cands;
  for (std::uint32_t e = 0; e < m.entity_count(); ++e) {
    Triad t = truth;
    (side == Side::Subject ? t.s : t.o) = e;
    const bool is_truth = t == truth;
    if (!is_truth && protocol == Protocol::Filtered && known.contains(t)) continue;
    cands.push_back({score(m, t), is_truth});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.score != b.score) return a.score > b.score;
    return !a.is_truth && b.is_truth;
  });
  for (std::size_t i = 0; i < cands.size(); ++i)
    if (cands[i].is_truth) return static_cast<std::uint32_t>(i + 1);
  return 0;
}

/// -log(exp(pos) / sum exp) evaluated directly in long double.
inline long double multiclass_nll(double pos, const std::vector<double>& negs) {
  long double denom = std::exp(static_cast<long double>(pos));
  for (double v : negs) denom += std::exp(static_cast<long double>(v));
  return -std::log(std::exp(static_cast<long double>(pos)) / denom);
}

inline double pairwise(const std::vector<double>& pos, const std::vector<double>& neg, double margin) {
  const std::size_t eta = neg.size() / pos.size();
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (std::size_t j = 0; j < eta; ++j) {
      const double v = margin - pos[i] + neg[i * eta + j];
      sum += v > 0 ? v : 0;
      ++pairs;
    }
  return sum / pairs;
}

inline std::map<std::string, std::size_t> tally(const std::vector<Triple>& triples, int role) {
  std::map<std::string, std::size_t> out;
  for (const auto& t : triples) ++out[role == 0 ? t.subject : role == 1 ? t.predicate : t.object];
  return out;
}

/// A model with arbitrary tables: random values, optionally quantised to a
/// few levels so exact score ties occur.
inline EmbeddingModel random_model(Family family, int k, std::size_t n_ent, std::size_t n_rel,
                                   std::uint64_t seed, bool coarse = false) {
  ModelConfig c;
  c.family = family;
  c.k = k;
  Vocabulary ents, rels;
  for (std::size_t i = 0; i < n_ent; ++i) ents.intern("e" + std::to_string(i));
  for (std::size_t i = 0; i < n_rel; ++i) rels.intern("r" + std::to_string(i));
  EmbeddingModel m(c, ents, rels);
  RandomStream rng(seed);
  auto fill = [&](Matrix& t) {
    for (auto& v : t.data) {
      const double x = rng.uniform(-1.0, 1.0);
      v = static_cast<float>(coarse ? std::round(x * 2.0) / 2.0 : x);
    }
  };
  fill(m.entity_table());
  fill(m.relation_table());
  return m;
}

}  // namespace kge::oracle
