#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "kge/error.hpp"
#include "kge/graph.hpp"
#include "kge/random.hpp"

namespace kge {

/// What happens to a test triple whose entities or relation never occur in train.
enum class RepairMode { MoveToTrain, Drop };

struct SplitResult {
  KnowledgeGraph train;
  KnowledgeGraph test;
  std::vector<Triple> moved;    // test triples moved into train by repair
  std::vector<Triple> dropped;  // test triples removed by repair
  std::size_t train_before_repair = 0;
  std::size_t test_before_repair = 0;
};

namespace detail {

// Builds train/test from index sets over `g`, then repairs unseen entities
// in a single pass against the pre-repair train vocabulary.
inline SplitResult assemble_split(const KnowledgeGraph& g, std::vector<std::size_t> train_idx,
                                  std::vector<std::size_t> test_idx, RepairMode repair) {
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  const auto triads = g.triads();

  SplitResult r;
  r.train_before_repair = train_idx.size();
  r.test_before_repair = test_idx.size();

  std::vector<bool> entity_seen(g.entities().size(), false);
  std::vector<bool> relation_seen(g.relations().size(), false);
  GraphBuilder train;
  for (auto i : train_idx) {
    const auto& t = triads[i];
    entity_seen[t.s] = entity_seen[t.o] = true;
    relation_seen[t.p] = true;
    train.add(g.to_triple(t));
  }

  GraphBuilder test;
  for (auto i : test_idx) {
    const auto& t = triads[i];
    if (entity_seen[t.s] && entity_seen[t.o] && relation_seen[t.p]) {
      test.add(g.to_triple(t));
    } else if (repair == RepairMode::MoveToTrain) {
      r.moved.push_back(g.to_triple(t));
    } else {
      r.dropped.push_back(g.to_triple(t));
    }
  }
  for (const auto& t : r.moved) train.add(t);

  r.train = std::move(train).build();
  r.test = std::move(test).build();
  return r;
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, RandomStream rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(idx), rng);
  return idx;
}

}  // namespace detail

/// Number of training triples for a holdout split: round-half-up of fraction * n.
inline std::size_t holdout_train_size(std::size_t n, double train_fraction) {
  return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 0.5));
}

inline SplitResult split_holdout(const KnowledgeGraph& g, double train_fraction,
                                 std::uint64_t seed, RepairMode repair = RepairMode::MoveToTrain) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction", "must lie strictly between 0 and 1");
  if (g.empty()) throw EmptyGraphError("cannot split an empty graph");

  const auto idx = detail::shuffled_indices(g.size(), RandomStream::derive(seed, "split.holdout"));
  const auto n_train = holdout_train_size(g.size(), train_fraction);
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return detail::assemble_split(g, std::move(train), std::move(test), repair);
}

/// Sizes of k near-equal folds over n items; the first n % k folds get one extra.
inline std::vector<std::size_t> fold_sizes(std::size_t n, std::size_t k) {
  std::vector<std::size_t> sizes(k, n / k);
  for (std::size_t i = 0; i < n % k; ++i) ++sizes[i];
  return sizes;
}

inline std::vector<SplitResult> split_kfold(const KnowledgeGraph& g, std::size_t k,
                                            std::uint64_t seed,
                                            RepairMode repair = RepairMode::MoveToTrain) {
  if (k < 2) throw ConfigError("cv_k", "must be at least 2");
  if (k > g.size())
    throw ConfigError("cv_k", "k = " + std::to_string(k) + " exceeds triple count " +
                                  std::to_string(g.size()));

  const auto idx = detail::shuffled_indices(g.size(), RandomStream::derive(seed, "split.kfold"));
  const auto sizes = fold_sizes(g.size(), k);

  std::vector<SplitResult> folds;
  folds.reserve(k);
  std::size_t begin = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t end = begin + sizes[f];
    std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                  idx.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<std::size_t> train;
    train.reserve(g.size() - test.size());
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(begin));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(end), idx.end());
    folds.push_back(detail::assemble_split(g, std::move(train), std::move(test), repair));
    begin = end;
  }
  return folds;
}

}  // namespace kge
