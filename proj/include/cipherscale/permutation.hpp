#pragma once

#include <array>
#include <cstdint>

#include "cipherscale/vocab.hpp"

namespace cipherscale {

// Invertible relabeling of the 27 content symbols. map[j] is the image of
// symbol ID (j + 2); BOS and EOS are never remapped.
struct Permutation {
  std::array<int, kNumContent> map;

  int image_of(int id) const { return is_content_id(id) ? map[id - kFirstContentId] : id; }

  bool operator==(const Permutation&) const = default;
};

Permutation identity_permutation();

// Uniform over the 27! permutations, seeded Fisher-Yates. With
// pin_space=true the space symbol stays fixed and only the 26 letters are
// shuffled (sensitivity variant: the printed-rule example shows the space
// participating, so false is the default everywhere).
Permutation sample_permutation(std::uint64_t seed, bool pin_space = false);

bool is_bijection(const Permutation& perm);

Permutation invert(const Permutation& perm);

// permute(compose(g1, g2), s) == permute(g1, permute(g2, s))
Permutation compose(const Permutation& g1, const Permutation& g2);

// Relabels content IDs, leaves BOS/EOS and length untouched.
TokenSeq permute(const Permutation& perm, const TokenSeq& seq);

}  // namespace cipherscale
