#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cipherscale/nn/common.hpp"
#include "cipherscale/rng.hpp"
#include "cipherscale/vocab.hpp"

namespace cipherscale::nn {

// Pre-norm encoder-decoder sized for the dictionary-reconstruction task:
// source is a ciphertext ID sequence, target is BOS + 27 decode slots + EOS.
struct ModelConfig {
  int d_model = 64;
  int n_layers_enc = 2;
  int n_layers_dec = 2;
  int n_heads = 4;
  int d_ff = 256;
  int vocab_size = kVocabSize;
  int max_src_len = kMaxSeqLen;
  int tgt_len = kNumContent + 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (d_model < 1 || n_layers_enc < 1 || n_layers_dec < 1 || n_heads < 1 ||
        d_ff < 1) {
      throw std::invalid_argument("ModelConfig: all dims must be >= 1");
    }
    if (d_model % n_heads != 0) {
      throw std::invalid_argument("ModelConfig: d_model must divide by n_heads");
    }
    if (vocab_size != kVocabSize || tgt_len != kNumContent + 2) {
      throw std::invalid_argument("ModelConfig: vocab/tgt layout is fixed");
    }
  }

  bool operator==(const ModelConfig&) const = default;
};

template <class Scalar>
struct LinearParam {
  Mat<Scalar> w;  // d_in x d_out
  Vec<Scalar> b;
};

template <class Scalar>
struct LayerNormParam {
  Vec<Scalar> gain;
  Vec<Scalar> bias;
};

template <class Scalar>
struct AttentionParam {
  Mat<Scalar> wq, wk, wv, wo;  // all d x d, bias-free
};

template <class Scalar>
struct EncoderLayerParam {
  LayerNormParam<Scalar> ln1, ln2;
  AttentionParam<Scalar> attn;
  LinearParam<Scalar> ff1, ff2;
};

template <class Scalar>
struct DecoderLayerParam {
  LayerNormParam<Scalar> ln1, ln2, ln3;
  AttentionParam<Scalar> self_attn, cross_attn;
  LinearParam<Scalar> ff1, ff2;
};

template <class Scalar>
struct ModelParams {
  ModelConfig config;
  Mat<Scalar> embedding;  // vocab x d, shared by encoder and decoder inputs
  std::vector<EncoderLayerParam<Scalar>> encoder;
  std::vector<DecoderLayerParam<Scalar>> decoder;
  LayerNormParam<Scalar> encoder_norm, decoder_norm;
  LinearParam<Scalar> output;  // d x vocab
};

// ---------------------------------------------------------------------------
// Tensor enumeration. The visit order defines the checkpoint layout and the
// optimizer state pairing, so it never changes across releases.

template <class Params, class Fn>
void visit_tensors(Params& p, Fn&& fn) {
  fn(std::string("embedding"), p.embedding);
  for (std::size_t i = 0; i < p.encoder.size(); ++i) {
    const std::string base = "enc" + std::to_string(i) + ".";
    auto& l = p.encoder[i];
    fn(base + "ln1.gain", l.ln1.gain);
    fn(base + "ln1.bias", l.ln1.bias);
    fn(base + "attn.wq", l.attn.wq);
    fn(base + "attn.wk", l.attn.wk);
    fn(base + "attn.wv", l.attn.wv);
    fn(base + "attn.wo", l.attn.wo);
    fn(base + "ln2.gain", l.ln2.gain);
    fn(base + "ln2.bias", l.ln2.bias);
    fn(base + "ff1.w", l.ff1.w);
    fn(base + "ff1.b", l.ff1.b);
    fn(base + "ff2.w", l.ff2.w);
    fn(base + "ff2.b", l.ff2.b);
  }
  for (std::size_t i = 0; i < p.decoder.size(); ++i) {
    const std::string base = "dec" + std::to_string(i) + ".";
    auto& l = p.decoder[i];
    fn(base + "ln1.gain", l.ln1.gain);
    fn(base + "ln1.bias", l.ln1.bias);
    fn(base + "self.wq", l.self_attn.wq);
    fn(base + "self.wk", l.self_attn.wk);
    fn(base + "self.wv", l.self_attn.wv);
    fn(base + "self.wo", l.self_attn.wo);
    fn(base + "ln2.gain", l.ln2.gain);
    fn(base + "ln2.bias", l.ln2.bias);
    fn(base + "cross.wq", l.cross_attn.wq);
    fn(base + "cross.wk", l.cross_attn.wk);
    fn(base + "cross.wv", l.cross_attn.wv);
    fn(base + "cross.wo", l.cross_attn.wo);
    fn(base + "ln3.gain", l.ln3.gain);
    fn(base + "ln3.bias", l.ln3.bias);
    fn(base + "ff1.w", l.ff1.w);
    fn(base + "ff1.b", l.ff1.b);
    fn(base + "ff2.w", l.ff2.w);
    fn(base + "ff2.b", l.ff2.b);
  }
  fn(std::string("enc_norm.gain"), p.encoder_norm.gain);
  fn(std::string("enc_norm.bias"), p.encoder_norm.bias);
  fn(std::string("dec_norm.gain"), p.decoder_norm.gain);
  fn(std::string("dec_norm.bias"), p.decoder_norm.bias);
  fn(std::string("output.w"), p.output.w);
  fn(std::string("output.b"), p.output.b);
}

template <class Scalar>
struct TensorView {
  std::string name;
  Scalar* data;
  std::int64_t size;
  Eigen::Index rows, cols;
};

template <class Scalar>
std::vector<TensorView<Scalar>> tensor_views(ModelParams<Scalar>& p) {
  std::vector<TensorView<Scalar>> out;
  visit_tensors(p, [&](const std::string& name, auto& t) {
    out.push_back({name, t.data(), static_cast<std::int64_t>(t.size()),
                   t.rows(), t.cols()});
  });
  return out;
}

template <class Scalar>
std::vector<TensorView<const Scalar>> tensor_views(const ModelParams<Scalar>& p) {
  std::vector<TensorView<const Scalar>> out;
  visit_tensors(p, [&](const std::string& name, const auto& t) {
    out.push_back({name, t.data(), static_cast<std::int64_t>(t.size()),
                   t.rows(), t.cols()});
  });
  return out;
}

// ---------------------------------------------------------------------------
// Construction

inline std::int64_t count_params(const ModelConfig& c) {
  c.validate();
  const std::int64_t d = c.d_model, ff = c.d_ff, v = c.vocab_size;
  const std::int64_t ln = 2 * d;
  const std::int64_t attn = 4 * d * d;
  const std::int64_t ffn = (d * ff + ff) + (ff * d + d);
  const std::int64_t enc_layer = 2 * ln + attn + ffn;
  const std::int64_t dec_layer = 3 * ln + 2 * attn + ffn;
  return v * d + c.n_layers_enc * enc_layer + c.n_layers_dec * dec_layer +
         2 * ln + d * v + v;
}

template <class Scalar>
std::int64_t param_count(const ModelParams<Scalar>& p) {
  std::int64_t n = 0;
  for (const auto& t : tensor_views(p)) n += t.size;
  return n;
}

template <class Scalar>
ModelParams<Scalar> allocate_model(const ModelConfig& c) {
  c.validate();
  ModelParams<Scalar> p;
  p.config = c;
  const int d = c.d_model, ff = c.d_ff, v = c.vocab_size;
  p.embedding.resize(v, d);
  auto make_ln = [&](LayerNormParam<Scalar>& ln) {
    ln.gain.resize(d);
    ln.bias.resize(d);
  };
  auto make_attn = [&](AttentionParam<Scalar>& a) {
    a.wq.resize(d, d);
    a.wk.resize(d, d);
    a.wv.resize(d, d);
    a.wo.resize(d, d);
  };
  p.encoder.resize(c.n_layers_enc);
  for (auto& l : p.encoder) {
    make_ln(l.ln1);
    make_ln(l.ln2);
    make_attn(l.attn);
    l.ff1.w.resize(d, ff);
    l.ff1.b.resize(ff);
    l.ff2.w.resize(ff, d);
    l.ff2.b.resize(d);
  }
  p.decoder.resize(c.n_layers_dec);
  for (auto& l : p.decoder) {
    make_ln(l.ln1);
    make_ln(l.ln2);
    make_ln(l.ln3);
    make_attn(l.self_attn);
    make_attn(l.cross_attn);
    l.ff1.w.resize(d, ff);
    l.ff1.b.resize(ff);
    l.ff2.w.resize(ff, d);
    l.ff2.b.resize(d);
  }
  make_ln(p.encoder_norm);
  make_ln(p.decoder_norm);
  p.output.w.resize(d, v);
  p.output.b.resize(v);
  return p;
}

template <class Scalar>
ModelParams<Scalar> zeros_like(const ModelParams<Scalar>& other) {
  ModelParams<Scalar> p = allocate_model<Scalar>(other.config);
  for (auto& t : tensor_views(p)) {
    for (std::int64_t i = 0; i < t.size; ++i) t.data[i] = Scalar(0);
  }
  return p;
}

template <class Scalar>
void set_zero(ModelParams<Scalar>& p) {
  for (auto& t : tensor_views(p)) {
    for (std::int64_t i = 0; i < t.size; ++i) t.data[i] = Scalar(0);
  }
}

// grads += other, tensor by tensor in visit order.
template <class Scalar>
void accumulate(ModelParams<Scalar>& acc, const ModelParams<Scalar>& other) {
  auto a = tensor_views(acc);
  auto b = tensor_views(other);
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::int64_t i = 0; i < a[t].size; ++i) a[t].data[i] += b[t].data[i];
  }
}

template <class Scalar>
void scale_params(ModelParams<Scalar>& p, Scalar factor) {
  for (auto& t : tensor_views(p)) {
    for (std::int64_t i = 0; i < t.size; ++i) t.data[i] *= factor;
  }
}

// Weights ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)); fan-in is the input
// dimension (rows; columns for the embedding table). Norm gains start at 1,
// every bias at 0. Deterministic per config.seed.
template <class Scalar>
ModelParams<Scalar> init_model(const ModelConfig& c) {
  ModelParams<Scalar> p = allocate_model<Scalar>(c);
  Rng rng(hash64(c.seed, 0x494e4954ull));  // "INIT"
  for (auto& t : tensor_views(p)) {
    const bool is_gain = t.name.ends_with(".gain");
    const bool is_bias = t.name.ends_with(".bias") || t.name.ends_with(".b");
    if (is_gain) {
      for (std::int64_t i = 0; i < t.size; ++i) t.data[i] = Scalar(1);
    } else if (is_bias) {
      for (std::int64_t i = 0; i < t.size; ++i) t.data[i] = Scalar(0);
    } else {
      const double fan_in =
          t.name == "embedding" ? static_cast<double>(t.cols)
                                : static_cast<double>(t.rows);
      const double bound = 1.0 / std::sqrt(fan_in);
      for (std::int64_t i = 0; i < t.size; ++i) {
        t.data[i] = static_cast<Scalar>((2.0 * rng.next_double() - 1.0) * bound);
      }
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Layer forward/backward. All activations are (positions x features).

inline constexpr double kLayerNormEps = 1e-5;

template <class Scalar>
struct LayerNormCache {
  Mat<Scalar> normed;  // x_hat, before gain/bias
  Mat<Scalar> out;
  Vec<Scalar> rstd;
};

template <class Scalar>
void layer_norm_forward(const LayerNormParam<Scalar>& p, const Mat<Scalar>& x,
                        LayerNormCache<Scalar>& cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  cache.normed.resize(n, d);
  cache.out.resize(n, d);
  cache.rstd.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar mean = x.row(i).mean();
    const Scalar var = (x.row(i).array() - mean).square().mean();
    const Scalar rstd = Scalar(1) / std::sqrt(var + Scalar(kLayerNormEps));
    cache.rstd(i) = rstd;
    cache.normed.row(i) = (x.row(i).array() - mean) * rstd;
    cache.out.row(i) = cache.normed.row(i).cwiseProduct(p.gain.transpose()) +
                       p.bias.transpose();
  }
}

template <class Scalar>
Mat<Scalar> layer_norm_backward(const LayerNormParam<Scalar>& p,
                                LayerNormParam<Scalar>& grad,
                                const LayerNormCache<Scalar>& cache,
                                const Mat<Scalar>& dy) {
  const Eigen::Index n = dy.rows(), d = dy.cols();
  Mat<Scalar> dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    grad.gain += dy.row(i).cwiseProduct(cache.normed.row(i)).transpose();
    grad.bias += dy.row(i).transpose();
    // dxhat = dy .* gain; dx = rstd * (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat))
    auto dxhat = dy.row(i).cwiseProduct(p.gain.transpose());
    const Scalar m1 = dxhat.mean();
    const Scalar m2 = dxhat.cwiseProduct(cache.normed.row(i)).mean();
    dx.row(i) = cache.rstd(i) *
                ((dxhat.array() - m1) - cache.normed.row(i).array() * m2);
  }
  return dx;
}

template <class Scalar>
struct AttentionCache {
  Mat<Scalar> q, k, v;             // L x d, heads packed column-wise
  std::vector<Mat<Scalar>> attn;   // per head, Lq x Lk softmax rows
  Mat<Scalar> context;             // Lq x d, before the output projection
};

// query_in: Lq x d, kv_in: Lk x d (already normed). Causal masks row i to
// keys 0..i (only meaningful when Lq == Lk).
template <class Scalar>
Mat<Scalar> attention_forward(const AttentionParam<Scalar>& p,
                              const Mat<Scalar>& query_in,
                              const Mat<Scalar>& kv_in, int n_heads,
                              bool causal, AttentionCache<Scalar>& cache) {
  const Eigen::Index d = p.wq.rows();
  const Eigen::Index dh = d / n_heads;
  const Eigen::Index lq = query_in.rows(), lk = kv_in.rows();
  const Scalar alpha = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

  cache.q.noalias() = query_in * p.wq;
  cache.k.noalias() = kv_in * p.wk;
  cache.v.noalias() = kv_in * p.wv;
  cache.attn.assign(n_heads, Mat<Scalar>());
  cache.context.resize(lq, d);

  for (int h = 0; h < n_heads; ++h) {
    auto qh = cache.q.middleCols(h * dh, dh);
    auto kh = cache.k.middleCols(h * dh, dh);
    auto vh = cache.v.middleCols(h * dh, dh);
    Mat<Scalar>& a = cache.attn[h];
    a.noalias() = qh * kh.transpose();
    a *= alpha;
    if (causal) {
      masked_softmax_rows_inplace(a, [](Eigen::Index i) { return i + 1; });
    } else {
      masked_softmax_rows_inplace(a, [lk](Eigen::Index) { return lk; });
    }
    cache.context.middleCols(h * dh, dh).noalias() = a * vh;
  }
  return cache.context * p.wo;
}

// Returns (d_query_in, d_kv_in); weight grads accumulate into `grad`.
template <class Scalar>
std::pair<Mat<Scalar>, Mat<Scalar>> attention_backward(
    const AttentionParam<Scalar>& p, AttentionParam<Scalar>& grad,
    const AttentionCache<Scalar>& cache, const Mat<Scalar>& query_in,
    const Mat<Scalar>& kv_in, int n_heads, const Mat<Scalar>& d_out) {
  const Eigen::Index d = p.wq.rows();
  const Eigen::Index dh = d / n_heads;
  const Eigen::Index lq = query_in.rows(), lk = kv_in.rows();
  const Scalar alpha = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

  grad.wo.noalias() += cache.context.transpose() * d_out;
  Mat<Scalar> d_context = d_out * p.wo.transpose();

  Mat<Scalar> dq(lq, d), dk(lk, d), dv(lk, d);
  for (int h = 0; h < n_heads; ++h) {
    auto vh = cache.v.middleCols(h * dh, dh);
    auto qh = cache.q.middleCols(h * dh, dh);
    auto kh = cache.k.middleCols(h * dh, dh);
    auto d_ctx_h = d_context.middleCols(h * dh, dh);
    const Mat<Scalar>& a = cache.attn[h];

    Mat<Scalar> d_attn = d_ctx_h * vh.transpose();
    dv.middleCols(h * dh, dh).noalias() = a.transpose() * d_ctx_h;
    softmax_backward_inplace(a, d_attn);  // masked entries have a == 0
    dq.middleCols(h * dh, dh).noalias() = alpha * (d_attn * kh);
    dk.middleCols(h * dh, dh).noalias() = alpha * (d_attn.transpose() * qh);
  }

  grad.wq.noalias() += query_in.transpose() * dq;
  grad.wk.noalias() += kv_in.transpose() * dk;
  grad.wv.noalias() += kv_in.transpose() * dv;

  Mat<Scalar> d_query_in = dq * p.wq.transpose();
  Mat<Scalar> d_kv_in = dk * p.wk.transpose();
  d_kv_in.noalias() += dv * p.wv.transpose();
  return {std::move(d_query_in), std::move(d_kv_in)};
}

template <class Scalar>
struct FeedForwardCache {
  Mat<Scalar> z1;  // pre-activation, L x d_ff
  Mat<Scalar> a1;  // gelu(z1)
};

template <class Scalar>
Mat<Scalar> feed_forward_forward(const LinearParam<Scalar>& ff1,
                                 const LinearParam<Scalar>& ff2,
                                 const Mat<Scalar>& x,
                                 FeedForwardCache<Scalar>& cache) {
  cache.z1.noalias() = x * ff1.w;
  cache.z1.rowwise() += ff1.b.transpose();
  cache.a1 = cache.z1.unaryExpr([](Scalar v) { return gelu(v); });
  Mat<Scalar> out = cache.a1 * ff2.w;
  out.rowwise() += ff2.b.transpose();
  return out;
}

template <class Scalar>
Mat<Scalar> feed_forward_backward(const LinearParam<Scalar>& ff1,
                                  const LinearParam<Scalar>& ff2,
                                  LinearParam<Scalar>& g_ff1,
                                  LinearParam<Scalar>& g_ff2,
                                  const FeedForwardCache<Scalar>& cache,
                                  const Mat<Scalar>& x, const Mat<Scalar>& dy) {
  g_ff2.w.noalias() += cache.a1.transpose() * dy;
  g_ff2.b += dy.colwise().sum().transpose();
  Mat<Scalar> da1 = dy * ff2.w.transpose();
  Mat<Scalar> dz1 =
      da1.cwiseProduct(cache.z1.unaryExpr([](Scalar v) { return gelu_grad(v); }));
  g_ff1.w.noalias() += x.transpose() * dz1;
  g_ff1.b += dz1.colwise().sum().transpose();
  return dz1 * ff1.w.transpose();
}

// ---------------------------------------------------------------------------
// Encoder / decoder stacks

template <class Scalar>
struct EncoderLayerCache {
  LayerNormCache<Scalar> ln1, ln2;
  AttentionCache<Scalar> attn;
  FeedForwardCache<Scalar> ff;
};

template <class Scalar>
struct EncoderTrace {
  std::vector<int> tokens;
  std::vector<EncoderLayerCache<Scalar>> layers;
  LayerNormCache<Scalar> final_ln;
  const Mat<Scalar>& output() const { return final_ln.out; }
};

template <class Scalar>
Mat<Scalar> embed_tokens(const ModelParams<Scalar>& p,
                         const std::vector<int>& tokens,
                         const Mat<Scalar>& pe) {
  const Eigen::Index n = static_cast<Eigen::Index>(tokens.size());
  Mat<Scalar> x(n, p.config.d_model);
  for (Eigen::Index t = 0; t < n; ++t) {
    const int id = tokens[t];
    if (id < 0 || id >= p.config.vocab_size) {
      throw std::out_of_range("embed_tokens: token id out of range");
    }
    x.row(t) = p.embedding.row(id) + pe.row(t);
  }
  return x;
}

template <class Scalar>
void encode_forward(const ModelParams<Scalar>& p, const TokenSeq& src,
                    const Mat<Scalar>& pe, EncoderTrace<Scalar>& trace) {
  if (static_cast<int>(src.size()) > p.config.max_src_len) {
    throw std::invalid_argument("encode_forward: source exceeds max_src_len");
  }
  trace.tokens.assign(src.begin(), src.end());
  Mat<Scalar> x = embed_tokens(p, trace.tokens, pe);
  trace.layers.resize(p.encoder.size());
  for (std::size_t i = 0; i < p.encoder.size(); ++i) {
    const auto& l = p.encoder[i];
    auto& c = trace.layers[i];
    layer_norm_forward(l.ln1, x, c.ln1);
    x += attention_forward(l.attn, c.ln1.out, c.ln1.out, p.config.n_heads,
                           /*causal=*/false, c.attn);
    layer_norm_forward(l.ln2, x, c.ln2);
    x += feed_forward_forward(l.ff1, l.ff2, c.ln2.out, c.ff);
  }
  layer_norm_forward(p.encoder_norm, x, trace.final_ln);
}

template <class Scalar>
struct DecoderLayerCache {
  LayerNormCache<Scalar> ln1, ln2, ln3;
  AttentionCache<Scalar> self_attn, cross_attn;
  FeedForwardCache<Scalar> ff;
};

template <class Scalar>
struct DecoderTrace {
  std::vector<int> tokens;
  std::vector<DecoderLayerCache<Scalar>> layers;
  LayerNormCache<Scalar> final_ln;
  Mat<Scalar> logits;  // positions x vocab
};

template <class Scalar>
void decode_forward(const ModelParams<Scalar>& p,
                    const std::vector<int>& tgt_prefix,
                    const Mat<Scalar>& enc_out, const Mat<Scalar>& pe,
                    DecoderTrace<Scalar>& trace) {
  if (tgt_prefix.empty() || tgt_prefix.front() != kBosId) {
    throw std::invalid_argument("decode_forward: target prefix must start with BOS");
  }
  trace.tokens = tgt_prefix;
  Mat<Scalar> y = embed_tokens(p, trace.tokens, pe);
  trace.layers.resize(p.decoder.size());
  for (std::size_t i = 0; i < p.decoder.size(); ++i) {
    const auto& l = p.decoder[i];
    auto& c = trace.layers[i];
    layer_norm_forward(l.ln1, y, c.ln1);
    y += attention_forward(l.self_attn, c.ln1.out, c.ln1.out, p.config.n_heads,
                           /*causal=*/true, c.self_attn);
    layer_norm_forward(l.ln2, y, c.ln2);
    y += attention_forward(l.cross_attn, c.ln2.out, enc_out, p.config.n_heads,
                           /*causal=*/false, c.cross_attn);
    layer_norm_forward(l.ln3, y, c.ln3);
    y += feed_forward_forward(l.ff1, l.ff2, c.ln3.out, c.ff);
  }
  layer_norm_forward(p.decoder_norm, y, trace.final_ln);
  trace.logits.noalias() = trace.final_ln.out * p.output.w;
  trace.logits.rowwise() += p.output.b.transpose();
}

// Teacher-forced logits for an arbitrary prefix, the plain inference entry.
template <class Scalar>
Mat<Scalar> forward(const ModelParams<Scalar>& p, const TokenSeq& src,
                    const std::vector<int>& tgt_prefix) {
  const int need = std::max<int>(static_cast<int>(src.size()),
                                 static_cast<int>(tgt_prefix.size()));
  const Mat<Scalar> pe = sinusoidal_positions<Scalar>(need, p.config.d_model);
  EncoderTrace<Scalar> enc;
  encode_forward(p, src, pe, enc);
  DecoderTrace<Scalar> dec;
  decode_forward(p, tgt_prefix, enc.output(), pe, dec);
  return dec.logits;
}

// ---------------------------------------------------------------------------
// Loss on the 27 dictionary slots (EOS position excluded). Dictionary slots
// can only hold content symbols, so the softmax runs over the 27 content
// columns; BOS/EOS logits carry no probability mass and no gradient. The
// content-uniform anchor is therefore exactly ln 27.

template <class Scalar>
double slot_loss(const Mat<Scalar>& logits,
                 const std::array<int, kNumContent>& target) {
  if (logits.rows() < kNumContent) {
    throw std::invalid_argument("slot_loss: logits must cover 27 slots");
  }
  double total = 0.0;
  for (int i = 0; i < kNumContent; ++i) {
    if (!is_content_id(target[i])) {
      throw std::invalid_argument("slot_loss: target must be a content id");
    }
    const auto row = logits.row(i)
                         .segment(kFirstContentId, kNumContent)
                         .template cast<double>()
                         .eval();
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    total += lse - row(target[i] - kFirstContentId);
  }
  return total / kNumContent;
}

// Writes d(loss)/d(logits) and returns the loss. Rows past the 27 slots and
// the BOS/EOS columns get zero gradient.
template <class Scalar>
double slot_loss_backward(const Mat<Scalar>& logits,
                          const std::array<int, kNumContent>& target,
                          Mat<Scalar>& d_logits) {
  d_logits.setZero(logits.rows(), logits.cols());
  double total = 0.0;
  const Scalar inv = Scalar(1) / Scalar(kNumContent);
  for (int i = 0; i < kNumContent; ++i) {
    const auto row = logits.row(i).segment(kFirstContentId, kNumContent);
    const Scalar m = row.maxCoeff();
    Vec<Scalar> p = (row.array() - m).exp().matrix().transpose();
    const Scalar z = p.sum();
    p /= z;
    total += static_cast<double>(m) + std::log(static_cast<double>(z)) -
             static_cast<double>(row(target[i] - kFirstContentId));
    d_logits.row(i).segment(kFirstContentId, kNumContent) = (p * inv).transpose();
    d_logits(i, target[i]) -= inv;
  }
  return total / kNumContent;
}

// ---------------------------------------------------------------------------
// Full example backward: teacher-forced loss gradient for one
// (ciphertext, decode dictionary) pair, accumulated into `grads`.

template <class Scalar>
double example_forward_backward(const ModelParams<Scalar>& p,
                                const TokenSeq& src,
                                const std::array<int, kNumContent>& target,
                                const Mat<Scalar>& pe,
                                ModelParams<Scalar>& grads) {
  EncoderTrace<Scalar> enc;
  encode_forward(p, src, pe, enc);

  std::vector<int> tgt_input;
  tgt_input.reserve(kNumContent + 1);
  tgt_input.push_back(kBosId);
  for (int id : target) tgt_input.push_back(id);

  DecoderTrace<Scalar> dec;
  decode_forward(p, tgt_input, enc.output(), pe, dec);

  Mat<Scalar> d_logits;
  const double loss = slot_loss_backward(dec.logits, target, d_logits);

  // output projection
  grads.output.w.noalias() += dec.final_ln.out.transpose() * d_logits;
  grads.output.b += d_logits.colwise().sum().transpose();
  Mat<Scalar> dy = d_logits * p.output.w.transpose();
  dy = layer_norm_backward(p.decoder_norm, grads.decoder_norm, dec.final_ln, dy);

  Mat<Scalar> d_enc_out = Mat<Scalar>::Zero(enc.output().rows(), p.config.d_model);

  for (int i = static_cast<int>(p.decoder.size()) - 1; i >= 0; --i) {
    const auto& l = p.decoder[i];
    auto& c = dec.layers[i];
    auto& g = grads.decoder[i];
    {
      Mat<Scalar> d_branch = feed_forward_backward(l.ff1, l.ff2, g.ff1, g.ff2,
                                                   c.ff, c.ln3.out, dy);
      dy += layer_norm_backward(l.ln3, g.ln3, c.ln3, d_branch);
    }
    {
      auto [d_q_in, d_kv] = attention_backward(l.cross_attn, g.cross_attn,
                                               c.cross_attn, c.ln2.out,
                                               enc.output(), p.config.n_heads, dy);
      d_enc_out += d_kv;
      dy += layer_norm_backward(l.ln2, g.ln2, c.ln2, d_q_in);
    }
    {
      auto [d_q_in, d_kv] = attention_backward(l.self_attn, g.self_attn,
                                               c.self_attn, c.ln1.out,
                                               c.ln1.out, p.config.n_heads, dy);
      d_q_in += d_kv;  // self-attention: same input feeds queries and keys/values
      dy += layer_norm_backward(l.ln1, g.ln1, c.ln1, d_q_in);
    }
  }
  for (std::size_t t = 0; t < dec.tokens.size(); ++t) {
    grads.embedding.row(dec.tokens[t]) += dy.row(static_cast<Eigen::Index>(t));
  }

  Mat<Scalar> dx =
      layer_norm_backward(p.encoder_norm, grads.encoder_norm, enc.final_ln,
                          d_enc_out);
  for (int i = static_cast<int>(p.encoder.size()) - 1; i >= 0; --i) {
    const auto& l = p.encoder[i];
    auto& c = enc.layers[i];
    auto& g = grads.encoder[i];
    {
      Mat<Scalar> d_branch = feed_forward_backward(l.ff1, l.ff2, g.ff1, g.ff2,
                                                   c.ff, c.ln2.out, dx);
      dx += layer_norm_backward(l.ln2, g.ln2, c.ln2, d_branch);
    }
    {
      auto [d_q_in, d_kv] = attention_backward(l.attn, g.attn, c.attn,
                                               c.ln1.out, c.ln1.out,
                                               p.config.n_heads, dx);
      d_q_in += d_kv;
      dx += layer_norm_backward(l.ln1, g.ln1, c.ln1, d_q_in);
    }
  }
  for (std::size_t t = 0; t < enc.tokens.size(); ++t) {
    grads.embedding.row(enc.tokens[t]) += dx.row(static_cast<Eigen::Index>(t));
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Greedy autoregressive dictionary read-out

struct DictionaryPrediction {
  std::array<int, kNumContent> decode_map;
  // 27 x 29 row-stochastic matrix: the model's belief per dictionary slot.
  // Mass sits on the 27 content columns (a slot cannot decode to BOS/EOS),
  // matching the slot_loss normalization.
  Eigen::MatrixXd slot_probs;
};

template <class Scalar>
DictionaryPrediction predict_dictionary(const ModelParams<Scalar>& p,
                                        const TokenSeq& src) {
  const int need = std::max<int>(static_cast<int>(src.size()), p.config.tgt_len);
  const Mat<Scalar> pe = sinusoidal_positions<Scalar>(need, p.config.d_model);
  EncoderTrace<Scalar> enc;
  encode_forward(p, src, pe, enc);

  DictionaryPrediction out;
  out.slot_probs = Eigen::MatrixXd::Zero(kNumContent, kVocabSize);
  std::vector<int> prefix = {kBosId};
  DecoderTrace<Scalar> dec;
  for (int slot = 0; slot < kNumContent; ++slot) {
    decode_forward(p, prefix, enc.output(), pe, dec);
    const auto row = dec.logits.row(dec.logits.rows() - 1)
                         .segment(kFirstContentId, kNumContent)
                         .template cast<double>()
                         .eval();
    const double m = row.maxCoeff();
    Eigen::RowVectorXd probs = ((row.array() - m).exp()).matrix();
    probs /= probs.sum();
    out.slot_probs.row(slot).segment(kFirstContentId, kNumContent) = probs;

    int best = 0;
    for (int j = 1; j < kNumContent; ++j) {
      if (probs(j) > probs(best)) best = j;
    }
    out.decode_map[slot] = best + kFirstContentId;
    prefix.push_back(best + kFirstContentId);
  }
  return out;
}

}  // namespace cipherscale::nn
