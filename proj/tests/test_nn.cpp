#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "cipherscale/dataset.hpp"
#include "cipherscale/nn/adam.hpp"
#include "cipherscale/nn/checkpoint.hpp"
#include "cipherscale/nn/model.hpp"
#include "cipherscale/rng.hpp"
#include "cipherscale/textcorpus.hpp"

#include "support.hpp"

using namespace cipherscale;
using namespace cipherscale::nn;

TEST_SUITE_BEGIN("nn");

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.d_model = 16;
  c.n_layers_enc = 1;
  c.n_layers_dec = 1;
  c.n_heads = 2;
  c.d_ff = 32;
  c.seed = 12345;
  return c;
}

TokenSeq random_cipher(Rng& rng, int len) {
  TokenSeq s = {kBosId};
  for (int i = 0; i < len; ++i) {
    s.push_back(kFirstContentId + static_cast<int>(rng.next_below(kNumContent)));
  }
  s.push_back(kEosId);
  return s;
}

std::array<int, kNumContent> random_target(Rng& rng) {
  std::array<int, kNumContent> t;
  for (int j = 0; j < kNumContent; ++j) t[j] = j + kFirstContentId;
  for (int i = kNumContent - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(t[i], t[j]);
  }
  return t;
}

}  // namespace

TEST_CASE("init is deterministic and counts match the closed form") {
  ModelConfig config;
  config.d_model = 32;
  config.n_layers_enc = 1;
  config.n_layers_dec = 1;
  config.n_heads = 2;
  config.d_ff = 64;
  config.seed = 7;

  const auto a = init_model<float>(config);
  const auto b = init_model<float>(config);
  const auto va = tensor_views(a);
  const auto vb = tensor_views(b);
  REQUIRE(va.size() == vb.size());
  for (std::size_t t = 0; t < va.size(); ++t) {
    for (std::int64_t i = 0; i < va[t].size; ++i) {
      CHECK(va[t].data[i] == vb[t].data[i]);
    }
  }

  CHECK(param_count(a) == count_params(config));

  ModelConfig other_seed = config;
  other_seed.seed = 8;
  CHECK(count_params(other_seed) == count_params(config));

  ModelConfig wider = config;
  wider.d_ff *= 2;
  CHECK(count_params(wider) > count_params(config));
  ModelConfig deeper = config;
  deeper.n_layers_enc += 1;
  CHECK(count_params(deeper) > count_params(config));
  ModelConfig more_width = config;
  more_width.d_model *= 2;
  CHECK(count_params(more_width) > count_params(config));

  CHECK_THROWS(count_params(ModelConfig{.d_model = 30, .n_heads = 4}));
}

TEST_CASE("init statistics: weight tensors center on zero") {
  ModelConfig config;
  config.d_model = 64;
  config.d_ff = 256;
  config.seed = 99;
  const auto params = init_model<float>(config);
  for (const auto& t : tensor_views(params)) {
    if (t.name.ends_with(".gain") || t.name.ends_with(".bias") ||
        t.name.ends_with(".b")) {
      continue;
    }
    const double fan_in = t.name == "embedding" ? static_cast<double>(t.cols)
                                                : static_cast<double>(t.rows);
    const double bound = 1.0 / std::sqrt(fan_in);
    double mean = 0.0;
    for (std::int64_t i = 0; i < t.size; ++i) mean += t.data[i];
    mean /= static_cast<double>(t.size);
    // uniform(-bound, bound): sd of the sample mean is bound / sqrt(3 n)
    const double sigma = bound / std::sqrt(3.0 * static_cast<double>(t.size));
    CHECK(std::abs(mean) <= 3.0 * sigma);
  }
}

TEST_CASE("forward shape contract and input validation") {
  const auto params = init_model<float>(tiny_config());
  Rng rng(1);
  const TokenSeq src = random_cipher(rng, 40);
  std::vector<int> prefix = {kBosId, 5, 9, 17};
  const auto logits = forward(params, src, prefix);
  CHECK(logits.rows() == 4);
  CHECK(logits.cols() == 29);

  TokenSeq bad = src;
  bad[3] = 29;
  CHECK_THROWS(forward(params, bad, prefix));
  CHECK_THROWS(forward(params, src, {5}));  // prefix must start with BOS

  TokenSeq too_long = {kBosId};
  for (int i = 0; i < 600; ++i) too_long.push_back(kSpaceId);
  too_long.push_back(kEosId);
  CHECK_THROWS(forward(params, too_long, prefix));
}

TEST_CASE("logits are finite over random inputs and react to relabeling") {
  const auto params = init_model<float>(tiny_config());
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const TokenSeq src = random_cipher(rng, 10 + static_cast<int>(rng.next_below(90)));
    std::vector<int> prefix = {kBosId};
    const auto logits = forward(params, src, prefix);
    CHECK(logits.allFinite());
  }

  const TokenSeq src = random_cipher(rng, 60);
  const Permutation g = sample_permutation(17);
  const auto base = forward(params, src, {kBosId});
  const auto moved = forward(params, permute(g, src), {kBosId});
  CHECK((base - moved).cwiseAbs().maxCoeff() > 0.0f);
}

TEST_CASE("slot loss anchors: forced targets, content-uniform, near-threshold") {
  Rng rng(3);
  const auto target = random_target(rng);

  Mat<float> confident = Mat<float>::Zero(kNumContent, kVocabSize);
  for (int i = 0; i < kNumContent; ++i) confident(i, target[i]) = 60.0f;
  CHECK(slot_loss(confident, target) == doctest::Approx(0.0).epsilon(1e-9));

  const Mat<float> zeros = Mat<float>::Zero(kNumContent, kVocabSize);
  CHECK(slot_loss(zeros, target) ==
        doctest::Approx(std::log(27.0)).epsilon(1e-7));

  // per-slot probability 0.905 on the target: stays under the 0.1 bar
  const double t_logit = std::log(0.905 / (0.095 / 26.0));
  Mat<float> near = Mat<float>::Zero(kNumContent, kVocabSize);
  for (int i = 0; i < kNumContent; ++i) near(i, target[i]) = static_cast<float>(t_logit);
  const double loss = slot_loss(near, target);
  CHECK(loss == doctest::Approx(-std::log(0.905)).epsilon(1e-6));
  CHECK(loss < 0.1);

  // BOS/EOS logits carry no mass: changing them does not move the loss
  Mat<float> shifted = zeros;
  shifted.col(kBosId).setConstant(9.0f);
  shifted.col(kEosId).setConstant(-4.0f);
  CHECK(slot_loss(shifted, target) == slot_loss(zeros, target));
}

TEST_CASE("analytic gradients agree with central finite differences") {
  ModelConfig config = tiny_config();
  auto params = init_model<double>(config);
  Rng rng(4);
  const TokenSeq src = random_cipher(rng, 24);
  const auto target = random_target(rng);
  const Mat<double> pe = sinusoidal_positions<double>(64, config.d_model);

  auto grads = zeros_like(params);
  example_forward_backward(params, src, target, pe, grads);

  auto loss_at = [&]() {
    std::vector<int> tgt_input = {kBosId};
    for (int id : target) tgt_input.push_back(id);
    EncoderTrace<double> enc;
    encode_forward(params, src, pe, enc);
    DecoderTrace<double> dec;
    decode_forward(params, tgt_input, enc.output(), pe, dec);
    return slot_loss(dec.logits, target);
  };

  auto pviews = tensor_views(params);
  auto gviews = tensor_views(grads);
  std::int64_t total = 0;
  for (const auto& v : pviews) total += v.size;

  const double eps = 1e-4;
  double max_rel = 0.0;
  Rng pick(5);
  for (int s = 0; s < 50; ++s) {
    std::int64_t flat = static_cast<std::int64_t>(pick.next_below(total));
    std::size_t ti = 0;
    while (flat >= pviews[ti].size) {
      flat -= pviews[ti].size;
      ++ti;
    }
    double* slot = pviews[ti].data + flat;
    const double saved = *slot;
    *slot = saved + eps;
    const double up = loss_at();
    *slot = saved - eps;
    const double down = loss_at();
    *slot = saved;
    const double fd = (up - down) / (2.0 * eps);
    const double analytic = gviews[ti].data[flat];
    const double rel =
        std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-6});
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel < 1e-3);
}

TEST_CASE("unused tensor slices get exactly zero gradient") {
  ModelConfig config = tiny_config();
  auto params = init_model<float>(config);
  const Mat<float> pe = sinusoidal_positions<float>(64, config.d_model);
  Rng rng(6);
  const auto target = random_target(rng);

  // EOS appears in neither the source (raw prefix, no terminator) nor the
  // teacher-forced decoder input, so its embedding row is untouched.
  const TokenSeq src = {kBosId, 3, 4, 5, 2, 6};
  auto grads = zeros_like(params);
  example_forward_backward(params, src, target, pe, grads);
  CHECK(grads.embedding.row(kEosId).cwiseAbs().maxCoeff() == 0.0f);

  // BOS/EOS logit columns carry no probability mass, so the matching
  // output-projection columns stay at zero gradient.
  CHECK(grads.output.w.col(kBosId).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(grads.output.w.col(kEosId).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(grads.output.b(kBosId) == 0.0f);
  CHECK(grads.output.b(kEosId) == 0.0f);

  // The position predicting EOS sits past the 27 slots and is excluded.
  std::vector<int> tgt_input = {kBosId};
  for (int id : target) tgt_input.push_back(id);
  EncoderTrace<float> enc;
  encode_forward(params, src, pe, enc);
  DecoderTrace<float> dec;
  decode_forward(params, tgt_input, enc.output(), pe, dec);
  Mat<float> d_logits;
  slot_loss_backward(dec.logits, target, d_logits);
  CHECK(d_logits.rows() == kNumContent + 1);
  CHECK(d_logits.row(kNumContent).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("duplicating an example leaves the mean-loss gradient unchanged") {
  ModelConfig config = tiny_config();
  auto params = init_model<float>(config);
  const Mat<float> pe = sinusoidal_positions<float>(64, config.d_model);
  Rng rng(8);
  const TokenSeq src = random_cipher(rng, 30);
  const auto target = random_target(rng);

  // per-example buffers reduced in slot order, as the trainer does
  auto g1 = zeros_like(params);
  example_forward_backward(params, src, target, pe, g1);

  auto slot_a = zeros_like(params);
  auto slot_b = zeros_like(params);
  example_forward_backward(params, src, target, pe, slot_a);
  example_forward_backward(params, src, target, pe, slot_b);
  auto g2 = zeros_like(params);
  accumulate(g2, slot_a);
  accumulate(g2, slot_b);
  scale_params(g2, 0.5f);

  auto v1 = tensor_views(g1);
  auto v2 = tensor_views(g2);
  for (std::size_t t = 0; t < v1.size(); ++t) {
    for (std::int64_t i = 0; i < v1[t].size; ++i) {
      CHECK(v1[t].data[i] == v2[t].data[i]);
    }
  }
}

TEST_CASE("predict_dictionary: range contract and rigged-argmax behaviour") {
  ModelConfig config = tiny_config();
  auto params = init_model<float>(config);
  Rng rng(9);
  const TokenSeq src = random_cipher(rng, 50);

  const auto pred = predict_dictionary(params, src);
  CHECK(pred.slot_probs.rows() == kNumContent);
  CHECK(pred.slot_probs.cols() == kVocabSize);
  for (int j = 0; j < kNumContent; ++j) {
    CHECK(pred.decode_map[j] >= kFirstContentId);
    CHECK(pred.decode_map[j] < kVocabSize);
    CHECK(pred.slot_probs.row(j).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(pred.slot_probs(j, kBosId) == 0.0);
    CHECK(pred.slot_probs(j, kEosId) == 0.0);
  }

  // a huge output bias pins every slot to one symbol
  params.output.b.setZero();
  params.output.b(Vocab::content_id('q')) = 50.0f;
  const auto rigged = predict_dictionary(params, src);
  for (int j = 0; j < kNumContent; ++j) {
    CHECK(rigged.decode_map[j] == Vocab::content_id('q'));
  }
}

TEST_CASE("untrained model sits at chance accuracy") {
  ModelConfig config = tiny_config();
  const auto params = init_model<float>(config);
  const Vocab vocab;
  const NGramModel lm = testsupport::english_model(2);
  const auto corpus = synth_corpus(77, 100, lm);
  const CipherDataset ds = build_dataset(corpus, vocab, 3, Split::kTest);

  std::int64_t correct = 0;
  for (const auto& ex : ds.examples) {
    const auto pred = predict_dictionary(params, ex.ciphertext);
    for (int j = 0; j < kNumContent; ++j) {
      if (pred.decode_map[j] == ex.decode_target[j]) ++correct;
    }
  }
  const double acc =
      static_cast<double>(correct) / (ds.examples.size() * kNumContent);
  CHECK(std::abs(acc - 1.0 / 27.0) <= 0.015);
}

TEST_CASE("adam: deterministic updates that reduce a simple objective") {
  ModelConfig config = tiny_config();
  auto params = init_model<float>(config);
  auto params2 = init_model<float>(config);
  AdamConfig hp;
  hp.lr = 1e-3;
  Adam<float> opt(config, hp);
  Adam<float> opt2(config, hp);

  const Mat<float> pe = sinusoidal_positions<float>(64, config.d_model);
  Rng rng(10);
  const TokenSeq src = random_cipher(rng, 20);
  const auto target = random_target(rng);

  double prev = 1e9;
  for (int step = 0; step < 8; ++step) {
    auto grads = zeros_like(params);
    const double loss = example_forward_backward(params, src, target, pe, grads);
    opt.step(params, grads);

    auto grads2 = zeros_like(params2);
    example_forward_backward(params2, src, target, pe, grads2);
    opt2.step(params2, grads2);

    if (step == 7) CHECK(loss < prev);
    if (step == 0) prev = loss;
  }
  // two identical runs stay bit-identical
  auto v1 = tensor_views(params);
  auto v2 = tensor_views(params2);
  for (std::size_t t = 0; t < v1.size(); ++t) {
    for (std::int64_t i = 0; i < v1[t].size; ++i) {
      CHECK(v1[t].data[i] == v2[t].data[i]);
    }
  }
  CHECK(opt.steps() == 8);
}

TEST_CASE("checkpoint round trip is exact, with and without optimizer state") {
  ModelConfig config = tiny_config();
  auto params = init_model<float>(config);
  const auto dir = std::filesystem::temp_directory_path() / "cipherscale_ckpt";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "model.bin").string();

  Checkpoint out;
  out.params = params;
  out.epoch = 3;
  out.test_loss = 1.25;
  out.config_digest = "deadbeef00000000";
  save_checkpoint(path, out);
  const Checkpoint in = load_checkpoint(path);
  CHECK(in.epoch == 3);
  CHECK(in.test_loss == 1.25);
  CHECK(in.config_digest == "deadbeef00000000");
  CHECK(in.params.config == config);
  auto v1 = tensor_views(params);
  auto v2 = tensor_views(in.params);
  for (std::size_t t = 0; t < v1.size(); ++t) {
    for (std::int64_t i = 0; i < v1[t].size; ++i) {
      CHECK(v1[t].data[i] == v2[t].data[i]);
    }
  }
  CHECK_FALSE(in.adam_m.has_value());

  AdamConfig hp;
  Adam<float> opt(config, hp);
  Checkpoint full = out;
  full.adam_config = hp;
  full.adam_steps = 17;
  full.adam_m = opt.first_moment();
  full.adam_v = opt.second_moment();
  save_checkpoint(path, full);
  const Checkpoint in2 = load_checkpoint(path);
  REQUIRE(in2.adam_m.has_value());
  CHECK(in2.adam_steps == 17);
  CHECK(in2.adam_config->lr == hp.lr);
  std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
