#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "cipherscale/ngram.hpp"
#include "cipherscale/rng.hpp"
#include "cipherscale/textcorpus.hpp"
#include "cipherscale/vocab.hpp"

#include "support.hpp"

using namespace cipherscale;

TEST_SUITE_BEGIN("textcorpus");

TEST_CASE("vocab is the fixed 29-symbol table") {
  const Vocab vocab;
  CHECK(Vocab::size == 29);
  CHECK(vocab.id_of("<bos>") == 0);
  CHECK(vocab.id_of("<eos>") == 1);
  CHECK(vocab.id_of(" ") == 2);
  CHECK(vocab.id_of("a") == 3);
  CHECK(vocab.id_of("z") == 28);
  for (int id = 0; id < Vocab::size; ++id) {
    CHECK(vocab.id_of(vocab.symbol_of(id)) == id);
  }
  CHECK_THROWS(vocab.symbol_of(29));
  CHECK_THROWS(vocab.id_of("A"));
}

TEST_CASE("normalize matches the stated rule") {
  CHECK(normalize("Apples are red, and sweet.") == "apples are red and sweet");
  CHECK(normalize("") == "");
  CHECK(normalize("A1B2  C!") == "a b c");
  CHECK(normalize("...!!!") == "");
  CHECK(normalize("  hello  world  ") == "hello world");
  CHECK(normalize("caf\xc3\xa9") == "caf");  // multibyte chars act as separators
}

TEST_CASE("normalize is idempotent and closed over the alphabet") {
  std::mt19937_64 gen(42);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> len(0, 120);
  for (int trial = 0; trial < 1000; ++trial) {
    std::string raw;
    const int n = len(gen);
    for (int i = 0; i < n; ++i) raw.push_back(static_cast<char>(byte(gen)));
    const std::string once = normalize(raw);
    CHECK(normalize(once) == once);
    for (std::size_t i = 0; i < once.size(); ++i) {
      const char c = once[i];
      CHECK(((c >= 'a' && c <= 'z') || c == ' '));
      if (c == ' ') {
        CHECK(i > 0);
        CHECK(i + 1 < once.size());
        CHECK(once[i - 1] != ' ');
      }
    }
  }
}

TEST_CASE("encode produces BOS + ids + EOS") {
  const Vocab vocab;
  CHECK(encode("ab c", vocab) == TokenSeq{0, 3, 4, 2, 5, 1});
  CHECK(encode("", vocab) == TokenSeq{0, 1});
  CHECK_THROWS(encode("ab!", vocab));
  CHECK_THROWS(encode("a", vocab, 1));
}

TEST_CASE("encode truncates to max_len and always ends in EOS") {
  const Vocab vocab;
  const std::string line(600, 'q');
  const TokenSeq seq = encode(line, vocab, 512);
  CHECK(seq.size() == 512);
  CHECK(seq.front() == kBosId);
  CHECK(seq.back() == kEosId);
  for (std::size_t i = 1; i + 1 < seq.size(); ++i) CHECK(seq[i] == vocab.id_of("q"));
}

TEST_CASE("decode inverts encode and validates ids") {
  const Vocab vocab;
  CHECK(decode(TokenSeq{0, 3, 4, 2, 5, 1}, vocab) == "ab c");
  CHECK(decode(TokenSeq{0, 1}, vocab) == "");
  CHECK_THROWS(decode(TokenSeq{0, 29, 1}, vocab));
  CHECK_THROWS(decode(TokenSeq{0, -1, 1}, vocab));
}

TEST_CASE("round trip over 1000 random normalized lines") {
  const Vocab vocab;
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> len(0, 510);
  std::uniform_int_distribution<int> sym(0, 26);
  for (int trial = 0; trial < 1000; ++trial) {
    // build a valid normalized line directly
    std::string line;
    const int n = len(gen);
    for (int i = 0; i < n; ++i) {
      int s = sym(gen);
      const bool space_ok = !line.empty() && line.back() != ' ' && i + 1 < n;
      if (s == 26 && !space_ok) s = sym(gen) % 26;
      line.push_back(s == 26 ? ' ' : static_cast<char>('a' + s));
    }
    if (!line.empty() && line.back() == ' ') line.pop_back();
    const TokenSeq seq = encode(line, vocab);
    CHECK(seq.size() <= 512);
    CHECK(decode(seq, vocab) == line);
  }
}

TEST_CASE("synth_corpus is deterministic and shape-correct") {
  const NGramModel lm = testsupport::english_model(2);
  const auto a = synth_corpus(7, 3, lm);
  const auto b = synth_corpus(7, 3, lm);
  CHECK(a == b);
  CHECK(a.size() == 3);
  CHECK(synth_corpus(7, 0, lm).empty());
  const auto c = synth_corpus(8, 3, lm);
  CHECK(a != c);

  const auto many = synth_corpus(11, 64, lm);
  for (const auto& line : many) {
    CHECK(line.size() >= 40);
    CHECK(line.size() <= 510);
    CHECK(normalize(line) == line);  // already normalized by construction
  }
}

TEST_CASE("synth corpus unigram profile tracks the constrained stationary distribution") {
  // Oracle: the no-space-after-space sampling chain has an explicit
  // transition matrix; its stationary distribution comes from power
  // iteration, independent of the sampler under test.
  const NGramModel lm = testsupport::english_model(1);

  // Hand-recount the smoothed unigram distribution from the corpus text.
  const auto lines = testsupport::english_lines();
  std::array<double, kNumContent> counts{};
  double total = 0.0;
  for (const auto& line : lines) {
    for (char ch : line) {
      counts[Vocab::content_id(ch) - kFirstContentId] += 1.0;
      total += 1.0;
    }
  }
  std::array<double, kNumContent> p{};
  for (int i = 0; i < kNumContent; ++i) {
    p[i] = (counts[i] + 0.5) / (total + 0.5 * kNumContent);
  }

  // Transition rows: from space, spaces are masked and renormalized.
  const int space = 0;  // alphabet position of the space symbol (lowest id)
  std::array<double, kNumContent> pi{};
  pi.fill(1.0 / kNumContent);
  const double non_space = 1.0 - p[space];
  for (int iter = 0; iter < 500; ++iter) {
    std::array<double, kNumContent> next{};
    for (int to = 0; to < kNumContent; ++to) {
      double v = 0.0;
      for (int from = 0; from < kNumContent; ++from) {
        const double row = from == space
                               ? (to == space ? 0.0 : p[to] / non_space)
                               : p[to];
        v += pi[from] * row;
      }
      next[to] = v;
    }
    pi = next;
  }

  const auto corpus = synth_corpus(123, 1024, lm);
  std::array<double, kNumContent> freq{};
  double n = 0.0;
  for (const auto& line : corpus) {
    for (char ch : line) {
      freq[Vocab::content_id(ch) - kFirstContentId] += 1.0;
      n += 1.0;
    }
  }
  for (int i = 0; i < kNumContent; ++i) {
    CHECK(std::abs(freq[i] / n - pi[i]) <= 0.02);
  }
}

TEST_SUITE_END();
