#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "kge/error.hpp"
#include "kge/model.hpp"

namespace kge {

namespace detail {

inline std::size_t negatives_per_positive(std::size_t n_pos, std::size_t n_neg) {
  if (n_pos == 0 || n_neg == 0 || n_neg % n_pos != 0)
    throw ConsistencyError("expected eta negatives per positive, got " + std::to_string(n_neg) +
                           " negatives for " + std::to_string(n_pos) + " positives");
  return n_neg / n_pos;
}

}  // namespace detail

/// Mean over (positive, negative) pairs of max(0, margin - pos + neg). The
/// negatives of positive i are neg[i*eta, (i+1)*eta).
inline double loss_pairwise(std::span<const double> pos, std::span<const double> neg, double margin) {
  const auto eta = detail::negatives_per_positive(pos.size(), neg.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (std::size_t j = 0; j < eta; ++j) total += std::max(0.0, margin - pos[i] + neg[i * eta + j]);
  return total / static_cast<double>(neg.size());
}

/// -log softmax of the positive score among {pos} + negatives.
inline double loss_multiclass_nll(double pos, std::span<const double> neg) {
  if (neg.empty()) throw ConsistencyError("multiclass-nll needs at least one negative");
  double hi = pos;
  for (double v : neg) hi = std::max(hi, v);
  double sum = std::exp(pos - hi);
  for (double v : neg) sum += std::exp(v - hi);
  return hi + std::log(sum) - pos;
}

/// Batch loss and its derivative with respect to every score. Pairwise is
/// averaged over pairs, multiclass-nll over positives.
inline double loss_with_score_grad(LossKind kind, std::span<const double> pos,
                                   std::span<const double> neg, double margin,
                                   std::span<double> dpos, std::span<double> dneg) {
  const auto eta = detail::negatives_per_positive(pos.size(), neg.size());
  std::fill(dpos.begin(), dpos.end(), 0.0);
  std::fill(dneg.begin(), dneg.end(), 0.0);
  double total = 0.0;

  if (kind == LossKind::Pairwise) {
    const double w = 1.0 / static_cast<double>(neg.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
      for (std::size_t j = 0; j < eta; ++j) {
        const double h = margin - pos[i] + neg[i * eta + j];
        if (h > 0.0) {
          total += h;
          dpos[i] -= w;
          dneg[i * eta + j] += w;
        }
      }
    }
    return total * w;
  }

  const double w = 1.0 / static_cast<double>(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const auto negs = neg.subspan(i * eta, eta);
    double hi = pos[i];
    for (double v : negs) hi = std::max(hi, v);
    double sum = std::exp(pos[i] - hi);
    for (double v : negs) sum += std::exp(v - hi);
    const double lse = hi + std::log(sum);
    total += lse - pos[i];
    dpos[i] = w * (std::exp(pos[i] - lse) - 1.0);
    for (std::size_t j = 0; j < eta; ++j) dneg[i * eta + j] = w * std::exp(negs[j] - lse);
  }
  return total * w;
}

}  // namespace kge
