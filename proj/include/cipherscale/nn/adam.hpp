#pragma once

#include <cmath>
#include <cstdint>

#include "cipherscale/nn/model.hpp"

namespace cipherscale::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. First/second moment buffers mirror the
// parameter structure tensor for tensor.
template <class Scalar>
class Adam {
 public:
  Adam(const ModelConfig& config, const AdamConfig& hp)
      : hp_(hp), m_(zeros_like(allocate_model<Scalar>(config))),
        v_(zeros_like(allocate_model<Scalar>(config))) {}

  void step(ModelParams<Scalar>& params, const ModelParams<Scalar>& grads) {
    ++t_;
    const Scalar b1 = static_cast<Scalar>(hp_.beta1);
    const Scalar b2 = static_cast<Scalar>(hp_.beta2);
    const Scalar lr = static_cast<Scalar>(hp_.lr);
    const Scalar eps = static_cast<Scalar>(hp_.eps);
    const Scalar bc1 = static_cast<Scalar>(1.0 - std::pow(hp_.beta1, static_cast<double>(t_)));
    const Scalar bc2 = static_cast<Scalar>(1.0 - std::pow(hp_.beta2, static_cast<double>(t_)));

    auto pv = tensor_views(params);
    auto gv = tensor_views(grads);
    auto mv = tensor_views(m_);
    auto vv = tensor_views(v_);
    for (std::size_t t = 0; t < pv.size(); ++t) {
      Scalar* p = pv[t].data;
      const Scalar* g = gv[t].data;
      Scalar* m = mv[t].data;
      Scalar* v = vv[t].data;
      for (std::int64_t i = 0; i < pv[t].size; ++i) {
        m[i] = b1 * m[i] + (Scalar(1) - b1) * g[i];
        v[i] = b2 * v[i] + (Scalar(1) - b2) * g[i] * g[i];
        const Scalar mhat = m[i] / bc1;
        const Scalar vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }

  const AdamConfig& hyperparams() const { return hp_; }
  std::int64_t steps() const { return t_; }
  ModelParams<Scalar>& first_moment() { return m_; }
  ModelParams<Scalar>& second_moment() { return v_; }
  const ModelParams<Scalar>& first_moment() const { return m_; }
  const ModelParams<Scalar>& second_moment() const { return v_; }
  void restore(std::int64_t steps) { t_ = steps; }

 private:
  AdamConfig hp_;
  std::int64_t t_ = 0;
  ModelParams<Scalar> m_, v_;
};

}  // namespace cipherscale::nn
