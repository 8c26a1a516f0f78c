#pragma once

#include <cstdint>
#include <vector>

#include "cipherscale/ngram.hpp"
#include "cipherscale/vocab.hpp"

namespace cipherscale {

// decode_map[i] is the plaintext symbol ID assigned to cipher symbol
// lm.alphabet()[i]; always a bijection on the active alphabet.
struct SolverResult {
  std::vector<int> decode_map;
  double score = 0.0;  // log-likelihood (nats) of the decoded text
  std::int64_t iterations = 0;
  int restarts_used = 0;
};

// Rank-to-rank matching of ciphertext symbol frequencies against the
// reference unigram frequencies. Ties break toward the lower symbol ID on
// both sides.
SolverResult frequency_decipher(const std::vector<TokenSeq>& ciphertexts,
                                const NGramModel& ref_unigrams);

// Stochastic swap search over decode maps, simulated-annealing acceptance
// exp(delta/T) with T_t = t0 * cooling^t. Restart 0 starts from the
// frequency map, later restarts from random bijections; each restart owns
// an RNG derived from (seed, restart). Deterministic given seed.
struct AnnealSchedule {
  double t0 = 1.0;
  double cooling = 0.999;
};

SolverResult hillclimb_decipher(const std::vector<TokenSeq>& ciphertexts,
                                const NGramModel& lm, std::int64_t budget,
                                int restarts, std::uint64_t seed,
                                const AnnealSchedule& schedule = {});

// Exhaustive search over all |alphabet|! decode maps. Ties go to the
// lexicographically smallest map. The oracle for solver validation.
SolverResult brute_force_decipher(const std::vector<TokenSeq>& ciphertexts,
                                  const NGramModel& lm, int max_size = 8);

// Log-likelihood of the ciphertexts decoded through decode_map, under lm.
// The scoring routine shared by all solvers.
double decode_map_score(const std::vector<TokenSeq>& ciphertexts,
                        const NGramModel& lm,
                        const std::vector<int>& decode_map);

}  // namespace cipherscale
