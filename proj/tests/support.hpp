#pragma once

// Shared fixtures for the unit and acceptance suites: reference corpora,
// the printed substitution-rule fixture, and the anchor decipherers
// (ground-truth oracle, constant map, uniform belief).

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "cipherscale/dataset.hpp"
#include "cipherscale/ngram.hpp"
#include "cipherscale/permutation.hpp"
#include "cipherscale/rng.hpp"
#include "cipherscale/scale.hpp"
#include "cipherscale/textcorpus.hpp"
#include "cipherscale/vocab.hpp"

namespace cipherscale::testsupport {

inline std::vector<NormalizedLine> english_lines() {
  std::vector<NormalizedLine> lines;
  std::string sentence;
  for (char c : builtin_seed_text()) {
    if (c == '.') {
      NormalizedLine n = normalize(sentence);
      if (!n.empty()) lines.push_back(std::move(n));
      sentence.clear();
    } else {
      sentence.push_back(c);
    }
  }
  NormalizedLine tail = normalize(sentence);
  if (!tail.empty()) lines.push_back(std::move(tail));
  return lines;
}

inline NGramModel english_model(int order) {
  return NGramModel::fit(english_lines(), order, 0.5);
}

// The printed 27-symbol substitution rule: plain row a..z then space,
// cipher row "mwt qovhdxizaulgcyresjkfpnb".
inline Permutation printed_rule() {
  const std::string plain = "abcdefghijklmnopqrstuvwxyz ";
  const std::string ciphered = "mwt qovhdxizaulgcyresjkfpnb";
  Permutation p;
  for (int i = 0; i < kNumContent; ++i) {
    p.map[Vocab::content_id(plain[i]) - kFirstContentId] =
        Vocab::content_id(ciphered[i]);
  }
  return p;
}

// Lines that contain every content symbol, with pairwise-distinct
// occurrence patterns: a shuffled alphabet followed by a tail that encodes
// the line index as run lengths (base-4 digits, one repeated letter per
// digit). n is capped at 256 so the encoding stays unique.
inline std::vector<NormalizedLine> full_support_corpus(std::uint64_t seed, int n) {
  if (n > 256) throw std::invalid_argument("full_support_corpus: n <= 256");
  Rng rng(hash64(seed, 0xf5));
  std::vector<NormalizedLine> lines;
  for (int i = 0; i < n; ++i) {
    std::string letters = "abcdefghijklmnopqrstuvwxyz";
    for (int j = 25; j > 0; --j) {
      const int k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(j) + 1));
      std::swap(letters[j], letters[k]);
    }
    std::string line;
    for (int j = 0; j < 26; ++j) {
      line.push_back(letters[j]);
      if (j % 5 == 4 && j != 25) line.push_back(' ');
    }
    int rem = i;
    for (int digit = 0; digit < 4; ++digit) {
      line.push_back(' ');
      line.append(static_cast<std::size_t>(rem % 4) + 1, letters[digit]);
      rem /= 4;
    }
    lines.push_back(line);
  }
  return lines;
}

inline std::vector<int> content_tokens(const TokenSeq& seq) {
  std::vector<int> out;
  for (int id : seq) {
    if (is_content_id(id)) out.push_back(id);
  }
  return out;
}

// Occurrence pattern: symbols renamed by order of first appearance.
inline std::vector<int> occurrence_pattern(const std::vector<int>& tokens) {
  std::map<int, int> first;
  std::vector<int> pattern;
  pattern.reserve(tokens.size());
  for (int id : tokens) {
    auto [it, inserted] = first.emplace(id, static_cast<int>(first.size()));
    pattern.push_back(it->second);
  }
  return pattern;
}

// Ground-truth decipherer. It recognizes a ciphertext by its occurrence
// pattern, recovers the positional relabeling against the stored plaintext,
// and completes unseen symbols by sorted order. On full-support plaintexts
// the map is exact and the re-labeling identity holds for every slot.
class OracleModel : public DecipherModel {
 public:
  explicit OracleModel(const CipherDataset& dataset, double epsilon = 1e-6)
      : epsilon_(epsilon) {
    for (const CipherExample& ex : dataset.examples) {
      std::vector<int> plain_tokens;
      for (int id : ex.ciphertext) {
        if (is_content_id(id)) {
          plain_tokens.push_back(ex.decode_target[id - kFirstContentId]);
        }
      }
      patterns_.emplace(occurrence_pattern(content_tokens(ex.ciphertext)),
                        std::move(plain_tokens));
    }
  }

  DecipherOutput decipher(const TokenSeq& ciphertext) const override {
    const std::vector<int> cipher_tokens = content_tokens(ciphertext);
    const auto it = patterns_.find(occurrence_pattern(cipher_tokens));
    if (it == patterns_.end()) {
      throw std::runtime_error("OracleModel: unknown ciphertext pattern");
    }
    const std::vector<int>& plain_tokens = it->second;

    std::array<int, kNumContent> map;
    map.fill(-1);
    std::array<bool, kNumContent> plain_used{};
    for (std::size_t t = 0; t < cipher_tokens.size(); ++t) {
      map[cipher_tokens[t] - kFirstContentId] = plain_tokens[t];
      plain_used[plain_tokens[t] - kFirstContentId] = true;
    }
    std::vector<int> free_plain;
    for (int id = kFirstContentId; id < kVocabSize; ++id) {
      if (!plain_used[id - kFirstContentId]) free_plain.push_back(id);
    }
    std::size_t next = 0;
    for (int j = 0; j < kNumContent; ++j) {
      if (map[j] < 0) map[j] = free_plain[next++];
    }

    DecipherOutput out;
    out.decode_map = map;
    out.slot_probs = one_hot_rows(map, epsilon_);
    return out;
  }

 private:
  double epsilon_;
  std::map<std::vector<int>, std::vector<int>> patterns_;
};

// Always answers one fixed injective map, ignoring the input.
class ConstantModel : public DecipherModel {
 public:
  ConstantModel() {
    for (int j = 0; j < kNumContent; ++j) map_[j] = j + kFirstContentId;
  }
  explicit ConstantModel(const std::array<int, kNumContent>& map) : map_(map) {}

  DecipherOutput decipher(const TokenSeq&) const override {
    DecipherOutput out;
    out.decode_map = map_;
    out.slot_probs = one_hot_rows(map_, 1e-6);
    return out;
  }

 private:
  std::array<int, kNumContent> map_;
};

// Uniform belief over the 27 content symbols in every slot.
class UniformBeliefModel : public DecipherModel {
 public:
  DecipherOutput decipher(const TokenSeq&) const override {
    DecipherOutput out;
    for (int j = 0; j < kNumContent; ++j) out.decode_map[j] = j + kFirstContentId;
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(kNumContent, kVocabSize);
    rows.rightCols(kNumContent).setConstant(1.0 / kNumContent);
    out.slot_probs = rows;
    return out;
  }
};

}  // namespace cipherscale::testsupport
