#include "cipherscale/permutation.hpp"

#include <utility>

#include "cipherscale/rng.hpp"

namespace cipherscale {

Permutation identity_permutation() {
  Permutation p;
  for (int j = 0; j < kNumContent; ++j) p.map[j] = j + kFirstContentId;
  return p;
}

Permutation sample_permutation(std::uint64_t seed, bool pin_space) {
  Permutation p = identity_permutation();
  Rng rng(hash64(seed, 0x5045524dull));  // "PERM"
  const int lo = pin_space ? 1 : 0;  // slot 0 is the space symbol
  for (int i = kNumContent - 1; i > lo; --i) {
    const int j = lo + static_cast<int>(
                           rng.next_below(static_cast<std::uint64_t>(i - lo) + 1));
    std::swap(p.map[i], p.map[j]);
  }
  return p;
}

bool is_bijection(const Permutation& perm) {
  bool seen[kNumContent] = {};
  for (int v : perm.map) {
    if (!is_content_id(v)) return false;
    if (seen[v - kFirstContentId]) return false;
    seen[v - kFirstContentId] = true;
  }
  return true;
}

Permutation invert(const Permutation& perm) {
  Permutation inv;
  for (int j = 0; j < kNumContent; ++j) {
    inv.map[perm.map[j] - kFirstContentId] = j + kFirstContentId;
  }
  return inv;
}

Permutation compose(const Permutation& g1, const Permutation& g2) {
  Permutation out;
  for (int j = 0; j < kNumContent; ++j) {
    out.map[j] = g1.map[g2.map[j] - kFirstContentId];
  }
  return out;
}

TokenSeq permute(const Permutation& perm, const TokenSeq& seq) {
  TokenSeq out;
  out.reserve(seq.size());
  for (int id : seq) out.push_back(perm.image_of(id));
  return out;
}

}  // namespace cipherscale
