#pragma once

#include <cstdint>

namespace cipherscale {

// Finalizer from splitmix64. Used both as the RNG step and as the mixer
// behind hash64, so every seed stream in the project is stdlib-independent.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stable combine of up to three 64-bit words. Seed-stream derivation
// (dataset seed, split tag, example index) and per-restart solver RNGs
// all go through here.
inline std::uint64_t hash64(std::uint64_t a, std::uint64_t b = 0,
                            std::uint64_t c = 0) {
  std::uint64_t h = 0x9e3779b97f4a7c15ull;
  h = mix64(h ^ (a + 0x9e3779b97f4a7c15ull));
  h = mix64(h ^ (b + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
  h = mix64(h ^ (c + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
  return h;
}

// splitmix64 generator. Small state, no stdlib distributions, identical
// output on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform in [0, n). Rejection sampling on the top of the range.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace cipherscale
