#pragma once

// Self-contained deterministic RNG: xoshiro256++ streams seeded through a
// SplitMix64-style mixer. Sub-streams are derived statelessly from a parent
// seed and a tag path, so parallel and serial execution draw identical values.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace evorl {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Tags for derived sub-streams. Values are part of the replay format: a run
// is reproducible only if these stay stable.
enum class Stream : std::uint64_t {
  Trial = 1,
  Mask = 2,
  PopInit = 3,
  Infancy = 4,
  Eval = 5,
  Variation = 6,
  Explore = 7,
  LearnerInit = 8,
};

// Order-sensitive: derive_seed(s, {a, b}) != derive_seed(s, {b, a}).
inline std::uint64_t derive_seed(std::uint64_t parent,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(parent ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t c : path) h = mix64(h ^ mix64(c + kGolden));
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t parent, Stream tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  return derive_seed(parent, {static_cast<std::uint64_t>(tag), a, b, c});
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s += kGolden;
      word = mix64(s);
    }
  }

  std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // [0, 1)
  double uniform() noexcept { return (next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept {
    return lo + uniform() * (hi - lo);
  }

  // [0, n), n > 0. Multiply-shift bounding; bias is ~n/2^64.
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  int below_int(int n) noexcept {
    return static_cast<int>(below(static_cast<std::uint64_t>(n)));
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Box-Muller, one value per call (no cached spare, keeps replay simple).
  double normal(double mean, double stddev) noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    return mean + stddev * r * std::cos(two_pi * u2);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace evorl
