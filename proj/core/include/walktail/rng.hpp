#pragma once

#include <cstdint>
#include <random>

namespace walktail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counting uniform stream on top of mt19937_64. All variate transforms in the
// project draw through uniform() so that the consumed-variates counter is
// exact and replay with the same seed is bit-identical.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  // Stream for replication `index` of level `level_index` under `master`.
  // Derivation: three splitmix64 steps over master, then level, then index;
  // the final output seeds mt19937_64. Stated so runs can be reproduced
  // without this class.
  static RandomStream for_replication(std::uint64_t master, std::uint64_t level_index,
                                      std::uint64_t index) {
    std::uint64_t s = master;
    (void)splitmix64(s);
    s ^= 0xA0761D6478BD642FULL * (level_index + 1);
    (void)splitmix64(s);
    s ^= 0xE7037ED1A0B428DBULL * (index + 1);
    return RandomStream(splitmix64(s));
  }

  // Uniform on (0, 1]; never returns 0, so log(u) is always finite.
  double uniform() {
    ++count_;
    const std::uint64_t bits = engine_() >> 11;  // 53 random bits
    return static_cast<double>(bits + 1) * 0x1.0p-53;
  }

  std::uint64_t draws() const { return count_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t count_ = 0;
};

}  // namespace walktail
