#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cipherscale/rng.hpp"
#include "cipherscale/textcorpus.hpp"
#include "cipherscale/vocab.hpp"

namespace cipherscale {

// Add-k smoothed character n-gram model over a (possibly reduced) content
// alphabet. Contexts are in-line windows padded at line start with a BOS
// filler digit; windows never cross lines.
//
// P(c | ctx) = (count(ctx, c) + k) / (count(ctx) + k * |alphabet|)
class NGramModel {
 public:
  NGramModel() = default;

  // order in {1,2,3}, k > 0. An empty `alphabet` means all 27 content
  // symbols; a custom alphabet restricts both contexts and the smoothing
  // denominator.
  static NGramModel fit(const std::vector<NormalizedLine>& corpus, int order,
                        double k, std::vector<int> alphabet = {});

  // Sum of ln P(c_i | context) over content positions; BOS/EOS excluded.
  double log_likelihood(const TokenSeq& seq) const;

  int order() const { return order_; }
  double k() const { return k_; }
  const std::vector<int>& alphabet() const { return alphabet_; }
  int alphabet_size() const { return static_cast<int>(alphabet_.size()); }

  // Position of a symbol ID within the alphabet, or -1.
  int alpha_pos(int symbol_id) const {
    return symbol_id >= 0 && symbol_id < kVocabSize ? alpha_pos_[symbol_id] : -1;
  }

  // Context indexing in alphabet-position space. Digit 0 is the BOS filler,
  // digit 1+a is alphabet position a; the most recent symbol sits in the
  // lowest digit. Solvers score decoded gram counts through these.
  int num_contexts() const { return n_ctx_; }
  int context_base() const { return alphabet_size() + 1; }
  int roll_context(int ctx_index, int next_alpha_pos) const {
    return static_cast<int>(
        (static_cast<std::int64_t>(ctx_index) * context_base() + 1 + next_alpha_pos) %
        n_ctx_);
  }
  double log_prob(int ctx_index, int alpha_position) const {
    return logp_[static_cast<std::size_t>(ctx_index) * alphabet_.size() +
                 static_cast<std::size_t>(alpha_position)];
  }

  // Smoothed unigram marginal of the training data, in alphabet order.
  const std::vector<double>& unigram_log_probs() const { return log_unigram_; }

  // Draw the next symbol ID given the most recent content IDs. When
  // allow_space is false the space symbol is masked out and the remaining
  // probabilities renormalized.
  int sample(std::span<const int> recent_ids, Rng& rng, bool allow_space) const;

  // Exact round-trip serialization (counts are integers).
  std::string to_json() const;
  static NGramModel from_json(const std::string& text);

  bool operator==(const NGramModel& other) const;

 private:
  void finalize_tables();

  int order_ = 0;
  double k_ = 0.0;
  std::vector<int> alphabet_;
  int alpha_pos_[kVocabSize] = {};
  int n_ctx_ = 0;
  std::vector<std::int64_t> counts_;      // n_ctx x A, row-major
  std::vector<std::int64_t> ctx_totals_;  // n_ctx
  std::vector<double> logp_;              // derived from counts_
  std::vector<double> log_unigram_;       // derived
};

}  // namespace cipherscale
