#include "cipherscale/solvers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cipherscale/rng.hpp"

namespace cipherscale {

namespace {

// Ciphertext n-gram counts in cipher-alphabet digit space, mirroring the
// NGramModel context encoding (digit 0 = BOS filler, 1+pos otherwise,
// most recent in the lowest digit). Scoring a decode map is then a sum of
// count * log_prob over distinct grams, and a two-symbol swap only touches
// grams containing either symbol.
struct GramTable {
  struct Gram {
    std::array<std::int8_t, 2> ctx_digits;  // up to order-1 digits, low first
    std::int8_t target = 0;                 // cipher alphabet position
    std::int64_t count = 0;
  };

  int order = 1;
  int base = 0;     // alphabet size + 1
  int n_ctx = 1;
  std::vector<Gram> grams;
  std::vector<std::vector<int>> grams_of_symbol;  // per cipher alphabet position

  GramTable(const std::vector<TokenSeq>& ciphertexts, const NGramModel& lm)
      : order(lm.order()), base(lm.context_base()), n_ctx(lm.num_contexts()) {
    const int A = lm.alphabet_size();
    std::vector<std::int64_t> dense(static_cast<std::size_t>(n_ctx) * A, 0);
    for (const TokenSeq& seq : ciphertexts) {
      int ctx = 0;
      for (int id : seq) {
        if (id == kBosId) continue;
        if (id == kEosId) break;
        const int a = lm.alpha_pos(id);
        if (a < 0) throw std::invalid_argument("solver: ciphertext symbol outside alphabet");
        dense[static_cast<std::size_t>(ctx) * A + a] += 1;
        ctx = lm.roll_context(ctx, a);
      }
    }
    grams_of_symbol.assign(A, {});
    for (int ctx = 0; ctx < n_ctx; ++ctx) {
      for (int a = 0; a < A; ++a) {
        const std::int64_t c = dense[static_cast<std::size_t>(ctx) * A + a];
        if (c == 0) continue;
        Gram g;
        g.ctx_digits = {0, 0};
        int rem = ctx;
        for (int d = 0; d < order - 1; ++d) {
          g.ctx_digits[d] = static_cast<std::int8_t>(rem % base);
          rem /= base;
        }
        g.target = static_cast<std::int8_t>(a);
        g.count = c;
        const int gi = static_cast<int>(grams.size());
        grams.push_back(g);
        bool touched[32] = {};
        touched[a] = true;
        for (int d = 0; d < order - 1; ++d) {
          if (g.ctx_digits[d] > 0) touched[g.ctx_digits[d] - 1] = true;
        }
        for (int s = 0; s < A; ++s) {
          if (touched[s]) grams_of_symbol[s].push_back(gi);
        }
      }
    }
  }

  // map_pos: cipher alphabet position -> plain alphabet position.
  double gram_log_prob(const NGramModel& lm, const Gram& g,
                       const std::vector<int>& map_pos) const {
    int idx = 0;
    for (int d = order - 2; d >= 0; --d) {
      const int digit = g.ctx_digits[d] == 0 ? 0 : 1 + map_pos[g.ctx_digits[d] - 1];
      idx = idx * base + digit;
    }
    return lm.log_prob(idx, map_pos[g.target]);
  }

  double full_score(const NGramModel& lm, const std::vector<int>& map_pos) const {
    double s = 0.0;
    for (const Gram& g : grams) {
      s += static_cast<double>(g.count) * gram_log_prob(lm, g, map_pos);
    }
    return s;
  }
};

std::vector<std::int64_t> symbol_counts(const std::vector<TokenSeq>& ciphertexts,
                                        const NGramModel& lm) {
  std::vector<std::int64_t> counts(lm.alphabet_size(), 0);
  for (const TokenSeq& seq : ciphertexts) {
    for (int id : seq) {
      if (id == kBosId) continue;
      if (id == kEosId) break;
      const int a = lm.alpha_pos(id);
      if (a < 0) throw std::invalid_argument("solver: ciphertext symbol outside alphabet");
      counts[a] += 1;
    }
  }
  return counts;
}

// Rank cipher symbols by frequency, plain symbols by reference probability,
// and pair rank for rank. Both orderings break ties by ascending symbol ID.
std::vector<int> frequency_map_pos(const std::vector<std::int64_t>& cipher_counts,
                                   const std::vector<double>& ref_log_probs) {
  const int A = static_cast<int>(cipher_counts.size());
  std::vector<int> cipher_rank(A), plain_rank(A);
  std::iota(cipher_rank.begin(), cipher_rank.end(), 0);
  std::iota(plain_rank.begin(), plain_rank.end(), 0);
  std::sort(cipher_rank.begin(), cipher_rank.end(), [&](int a, int b) {
    if (cipher_counts[a] != cipher_counts[b]) return cipher_counts[a] > cipher_counts[b];
    return a < b;
  });
  std::sort(plain_rank.begin(), plain_rank.end(), [&](int a, int b) {
    if (ref_log_probs[a] != ref_log_probs[b]) return ref_log_probs[a] > ref_log_probs[b];
    return a < b;
  });
  std::vector<int> map_pos(A);
  for (int r = 0; r < A; ++r) map_pos[cipher_rank[r]] = plain_rank[r];
  return map_pos;
}

std::vector<int> map_pos_to_ids(const std::vector<int>& map_pos,
                                const std::vector<int>& alphabet) {
  std::vector<int> ids(map_pos.size());
  for (std::size_t i = 0; i < map_pos.size(); ++i) ids[i] = alphabet[map_pos[i]];
  return ids;
}

}  // namespace

double decode_map_score(const std::vector<TokenSeq>& ciphertexts,
                        const NGramModel& lm,
                        const std::vector<int>& decode_map) {
  if (decode_map.size() != static_cast<std::size_t>(lm.alphabet_size())) {
    throw std::invalid_argument("decode_map_score: map size mismatch");
  }
  std::vector<int> map_pos(decode_map.size());
  for (std::size_t i = 0; i < decode_map.size(); ++i) {
    const int p = lm.alpha_pos(decode_map[i]);
    if (p < 0) throw std::invalid_argument("decode_map_score: plain symbol outside alphabet");
    map_pos[i] = p;
  }
  return GramTable(ciphertexts, lm).full_score(lm, map_pos);
}

SolverResult frequency_decipher(const std::vector<TokenSeq>& ciphertexts,
                                const NGramModel& ref_unigrams) {
  const auto counts = symbol_counts(ciphertexts, ref_unigrams);
  const auto map_pos = frequency_map_pos(counts, ref_unigrams.unigram_log_probs());
  SolverResult res;
  res.decode_map = map_pos_to_ids(map_pos, ref_unigrams.alphabet());
  res.score = GramTable(ciphertexts, ref_unigrams).full_score(ref_unigrams, map_pos);
  return res;
}

SolverResult hillclimb_decipher(const std::vector<TokenSeq>& ciphertexts,
                                const NGramModel& lm, std::int64_t budget,
                                int restarts, std::uint64_t seed,
                                const AnnealSchedule& schedule) {
  if (budget <= 0) throw std::invalid_argument("hillclimb_decipher: budget must be > 0");
  if (restarts < 1) throw std::invalid_argument("hillclimb_decipher: restarts must be >= 1");
  if (lm.order() < 2) throw std::invalid_argument("hillclimb_decipher: lm order must be >= 2");

  const int A = lm.alphabet_size();
  const GramTable table(ciphertexts, lm);
  const auto freq_start =
      frequency_map_pos(symbol_counts(ciphertexts, lm), lm.unigram_log_probs());

  std::vector<int> best_map;
  double best_score = -std::numeric_limits<double>::infinity();
  std::int64_t total_iterations = 0;

  std::vector<int> visited_stamp(table.grams.size(), -1);
  int stamp = 0;
  std::vector<int> affected;
  affected.reserve(table.grams.size());

  for (int restart = 0; restart < restarts; ++restart) {
    Rng rng(hash64(seed, 0x48434c4dull, static_cast<std::uint64_t>(restart)));  // "HCLM"
    std::vector<int> map_pos;
    if (restart == 0) {
      map_pos = freq_start;
    } else {
      map_pos.resize(A);
      std::iota(map_pos.begin(), map_pos.end(), 0);
      for (int i = A - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(map_pos[i], map_pos[j]);
      }
    }

    double score = table.full_score(lm, map_pos);
    std::vector<int> restart_best = map_pos;
    double restart_best_score = score;
    double temperature = schedule.t0;

    for (std::int64_t t = 0; t < budget; ++t, ++total_iterations) {
      int i = static_cast<int>(rng.next_below(A));
      int j = static_cast<int>(rng.next_below(A - 1));
      if (j >= i) ++j;

      // grams touching either swapped symbol, deduplicated
      affected.clear();
      ++stamp;
      for (int s : {i, j}) {
        for (int gi : table.grams_of_symbol[s]) {
          if (visited_stamp[gi] != stamp) {
            visited_stamp[gi] = stamp;
            affected.push_back(gi);
          }
        }
      }

      double before = 0.0, after = 0.0;
      for (int gi : affected) {
        before += static_cast<double>(table.grams[gi].count) *
                  table.gram_log_prob(lm, table.grams[gi], map_pos);
      }
      std::swap(map_pos[i], map_pos[j]);
      for (int gi : affected) {
        after += static_cast<double>(table.grams[gi].count) *
                 table.gram_log_prob(lm, table.grams[gi], map_pos);
      }
      const double delta = after - before;

      const bool accept =
          delta > 0.0 || rng.next_double() < std::exp(delta / temperature);
      if (accept) {
        score += delta;
        if (score > restart_best_score) {
          restart_best_score = score;
          restart_best = map_pos;
        }
      } else {
        std::swap(map_pos[i], map_pos[j]);  // undo
      }
      temperature *= schedule.cooling;
    }

    // Exact rescore; incremental updates carry rounding drift.
    restart_best_score = table.full_score(lm, restart_best);
    if (restart_best_score > best_score) {
      best_score = restart_best_score;
      best_map = restart_best;
    }
  }

  SolverResult res;
  res.decode_map = map_pos_to_ids(best_map, lm.alphabet());
  res.score = best_score;
  res.iterations = total_iterations;
  res.restarts_used = restarts;
  return res;
}

SolverResult brute_force_decipher(const std::vector<TokenSeq>& ciphertexts,
                                  const NGramModel& lm, int max_size) {
  const int A = lm.alphabet_size();
  if (A > max_size) {
    throw std::invalid_argument("brute_force_decipher: alphabet larger than max_size");
  }
  const GramTable table(ciphertexts, lm);
  std::vector<int> perm(A);
  std::iota(perm.begin(), perm.end(), 0);

  std::vector<int> best = perm;
  double best_score = table.full_score(lm, perm);
  std::int64_t n = 1;
  while (std::next_permutation(perm.begin(), perm.end())) {
    ++n;
    const double s = table.full_score(lm, perm);
    if (s > best_score) {  // lex order of enumeration keeps the smallest tie
      best_score = s;
      best = perm;
    }
  }

  SolverResult res;
  res.decode_map = map_pos_to_ids(best, lm.alphabet());
  res.score = best_score;
  res.iterations = n;
  return res;
}

}  // namespace cipherscale
