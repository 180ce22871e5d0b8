#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

#include "kge/text.hpp"

namespace kge {

/// Counter-based generator: the i-th draw is mix(key + i * gamma) (SplitMix64).
/// A stream is a pure function of its key, so streams keyed by
/// (seed, purpose, epoch, batch) are independent of evaluation order.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t key) : key_(key) {}

  static RandomStream derive(std::uint64_t seed, std::string_view purpose,
                             std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t k = mix(seed ^ fnv1a64(purpose));
    k = mix(k + 0x9e3779b97f4a7c15ULL * (a + 1));
    k = mix(k ^ (0xbf58476d1ce4e5b9ULL * (b + 1)));
    return RandomStream(k);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }

  std::uint64_t next() { return mix(key_ + (++counter_) * kGamma); }

  /// Unbiased integer in [0, n) (Lemire's multiply-and-reject). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    using u128 = unsigned __int128;
    std::uint64_t x = next();
    u128 m = static_cast<u128>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = next();
        m = static_cast<u128>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t counter() const noexcept { return counter_; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates with the stream's own bounded draws.
template <class T>
void shuffle(std::span<T> items, RandomStream& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace kge
