#include <doctest.h>

#include <cmath>

#include "cipherscale/ngram.hpp"
#include "cipherscale/permutation.hpp"
#include "cipherscale/rng.hpp"
#include "cipherscale/textcorpus.hpp"

#include "support.hpp"

using namespace cipherscale;

TEST_SUITE_BEGIN("ngram");

TEST_CASE("bigram fixture on a reduced {a,b} alphabet") {
  // corpus "aaaa": three (a|a) bigrams; P(a|a) = (3 + 0.5) / (3 + 0.5*2)
  const std::vector<int> ab = {Vocab::content_id('a'), Vocab::content_id('b')};
  const NGramModel m = NGramModel::fit({"aaaa"}, 2, 0.5, ab);
  const int a = m.alpha_pos(Vocab::content_id('a'));
  int ctx = m.roll_context(0, a);
  CHECK(std::exp(m.log_prob(ctx, a)) == doctest::Approx(0.875).epsilon(1e-12));
}

TEST_CASE("unigram fixture on the full alphabet") {
  const NGramModel m = NGramModel::fit({"ab"}, 1, 0.5);
  const double expected = std::log((1.0 + 0.5) / (2.0 + 0.5 * 27));
  const int a = m.alpha_pos(Vocab::content_id('a'));
  const int b = m.alpha_pos(Vocab::content_id('b'));
  CHECK(m.log_prob(0, a) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(m.log_prob(0, b) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("probabilities over any context sum to one") {
  const NGramModel m = testsupport::english_model(3);
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const int ctx = static_cast<int>(rng.next_below(m.num_contexts()));
    double sum = 0.0;
    for (int a = 0; a < m.alphabet_size(); ++a) sum += std::exp(m.log_prob(ctx, a));
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("log likelihood: empty payload, analytic smoothed-uniform, errors") {
  const NGramModel m = testsupport::english_model(2);
  CHECK(m.log_likelihood({kBosId, kEosId}) == 0.0);

  // fit on a corpus with zero characters: every probability collapses to 1/27
  const NGramModel uniform = NGramModel::fit({""}, 1, 0.5);
  const TokenSeq one = {kBosId, Vocab::content_id('q'), kEosId};
  CHECK(uniform.log_likelihood(one) ==
        doctest::Approx(std::log(1.0 / 27.0)).epsilon(1e-12));

  CHECK_THROWS(NGramModel::fit({}, 2, 0.5));
  CHECK_THROWS(NGramModel::fit({"ab"}, 0, 0.5));
  CHECK_THROWS(NGramModel::fit({"ab"}, 4, 0.5));
  CHECK_THROWS(NGramModel::fit({"ab"}, 2, 0.0));
}

TEST_CASE("model text scores above reversed text on average") {
  const NGramModel m = testsupport::english_model(3);
  const auto samples = synth_corpus(55, 100, m);
  const Vocab vocab;
  double forward = 0.0, reversed = 0.0;
  double n = 0.0;
  for (const auto& line : samples) {
    std::string rev(line.rbegin(), line.rend());
    forward += m.log_likelihood(encode(line, vocab));
    reversed += m.log_likelihood(encode(normalize(rev), vocab));
    n += static_cast<double>(line.size());
  }
  CHECK(forward / n > reversed / n);
}

TEST_CASE("permutation covariance: relabeled model scores relabeled text identically") {
  const Vocab vocab;
  const auto corpus = testsupport::english_lines();
  const NGramModel m = NGramModel::fit(corpus, 3, 0.5);

  Rng rng(19);
  for (int t = 0; t < 20; ++t) {
    const Permutation g = sample_permutation(rng.next_u64());
    std::vector<NormalizedLine> permuted;
    for (const auto& line : corpus) {
      permuted.push_back(decode(permute(g, encode(line, vocab)), vocab));
    }
    const NGramModel mg = NGramModel::fit(permuted, 3, 0.5);
    const TokenSeq seq = encode(corpus[t % corpus.size()], vocab);
    CHECK(mg.log_likelihood(permute(g, seq)) == m.log_likelihood(seq));
  }
}

TEST_CASE("serialization round trip is exact") {
  const NGramModel m = testsupport::english_model(3);
  const NGramModel back = NGramModel::from_json(m.to_json());
  CHECK(back == m);
  CHECK(back.to_json() == m.to_json());

  const std::vector<int> tiny = {Vocab::content_id('a'), Vocab::content_id('b'),
                                 Vocab::content_id('c')};
  const NGramModel r = NGramModel::fit({"abccba"}, 2, 0.25, tiny);
  CHECK(NGramModel::from_json(r.to_json()) == r);
}

TEST_SUITE_END();
