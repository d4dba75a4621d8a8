#pragma once

// Counter-based random streams.
//
// A stream is a (key, counter) pair fed through Philox4x32-10. Child streams
// are obtained by hashing a label into the parent key, so the numbers a
// consumer sees depend only on the seed and the label path that leads to it,
// never on the order in which sibling streams are consumed. This is what
// makes parallel loops over parents reproducible.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace iclust {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr void philox_round(std::array<std::uint32_t, 4>& ctr,
                                   std::array<std::uint32_t, 2> key) {
  constexpr std::uint64_t m0 = 0xD2511F53u;
  constexpr std::uint64_t m1 = 0xCD9E8D57u;
  const std::uint64_t p0 = m0 * ctr[0];
  const std::uint64_t p1 = m1 * ctr[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

// Philox4x32 with 10 rounds (Salmon et al., SC'11).
inline constexpr std::array<std::uint32_t, 4> philox4x32(
    std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, key);
    key[0] += 0x9E3779B9u;
    key[1] += 0xBB67AE85u;
  }
  return ctr;
}

}  // namespace detail

/// Purpose tags used as the first component of structural labels.
enum class StreamTag : std::uint64_t {
  kGeneration = 1,
  kParent = 2,
  kOffspringCount = 3,
  kDisplacement = 4,
  kThinning = 5,
  kRetention = 6,
  kNoise = 7,
  kReplicate = 8,
  kTime = 9,
  kInitial = 10,
  kField = 11,
  kNull = 12,
  kUser = 100,
};

class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0)
      : key_(detail::splitmix64(detail::splitmix64(seed) ^ 0x5851F42D4C957F2DULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (buffered_ == 0) refill();
    --buffered_;
    return buffer_[buffered_];
  }

  /// Independent child stream identified by `label`.
  [[nodiscard]] RandomStream split(std::uint64_t label) const {
    RandomStream child;
    child.key_ = detail::splitmix64(key_ ^ detail::splitmix64(label + 0xA0761D6478BD642FULL));
    return child;
  }

  [[nodiscard]] RandomStream split(StreamTag tag, std::uint64_t index = 0) const {
    return split(static_cast<std::uint64_t>(tag)).split(index);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is discarded so the
  /// stream position after a call does not depend on call history.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  [[nodiscard]] std::uint64_t key() const { return key_; }

 private:
  void refill() {
    const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter_),
                                           static_cast<std::uint32_t>(counter_ >> 32), 0u, 0u};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(key_),
                                           static_cast<std::uint32_t>(key_ >> 32)};
    const auto out = detail::philox4x32(ctr, key);
    ++counter_;
    buffer_[1] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    buffer_[0] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    buffered_ = 2;
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

}  // namespace iclust
