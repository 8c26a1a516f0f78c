#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cipherscale/permutation.hpp"
#include "cipherscale/textcorpus.hpp"
#include "cipherscale/vocab.hpp"

namespace cipherscale {

enum class Split { kTrain, kTest };

inline std::uint64_t split_tag(Split s) { return s == Split::kTrain ? 1 : 2; }

// One record: permuted token IDs plus the decoding dictionary. Slot j of
// decode_target holds the plaintext ID that cipher ID (j + 2) decodes to,
// i.e. the inverse of the permutation that produced the ciphertext.
struct CipherExample {
  TokenSeq ciphertext;
  std::array<int, kNumContent> decode_target;
  std::uint64_t perm_seed;
};

struct CipherDataset {
  std::vector<CipherExample> examples;
  std::uint64_t seed = 0;
  int n_multiplier = 1;
  Split split = Split::kTrain;
};

// One example per corpus line; every example gets a freshly sampled
// permutation from the counter-mode stream hash64(seed, split, index), so
// train and test draw from disjoint streams. pin_space keeps the space
// symbol fixed in every sampled permutation (sensitivity variant).
CipherDataset build_dataset(const std::vector<NormalizedLine>& corpus,
                            const Vocab& vocab, std::uint64_t seed, Split split,
                            int max_len = kMaxSeqLen, bool pin_space = false);

// JSON Lines, one object per example: ciphertext, decode_target, perm_seed.
// Byte-identical output for identical inputs.
void write_dataset_jsonl(const std::string& path, const CipherDataset& ds);
CipherDataset read_dataset_jsonl(const std::string& path);

}  // namespace cipherscale
