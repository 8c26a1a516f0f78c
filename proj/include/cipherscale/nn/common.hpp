#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace cipherscale::nn {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Exact GELU, x * Phi(x).
template <class Scalar>
inline Scalar gelu(Scalar x) {
  return static_cast<Scalar>(0.5) * x *
         (static_cast<Scalar>(1) + std::erf(x * static_cast<Scalar>(M_SQRT1_2)));
}

template <class Scalar>
inline Scalar gelu_grad(Scalar x) {
  const Scalar phi_cdf = static_cast<Scalar>(0.5) *
      (static_cast<Scalar>(1) + std::erf(x * static_cast<Scalar>(M_SQRT1_2)));
  const Scalar phi_pdf = static_cast<Scalar>(
      std::exp(-0.5 * static_cast<double>(x) * static_cast<double>(x)) /
      std::sqrt(2.0 * M_PI));
  return phi_cdf + x * phi_pdf;
}

// Fixed sin/cos position code: even columns sin, odd columns cos, wavelength
// geometric in the pair index.
template <class Scalar>
Mat<Scalar> sinusoidal_positions(int len, int d_model) {
  Mat<Scalar> pe(len, d_model);
  for (int pos = 0; pos < len; ++pos) {
    for (int i = 0; i < d_model; i += 2) {
      const double rate = std::pow(10000.0, static_cast<double>(i) / d_model);
      const double angle = static_cast<double>(pos) / rate;
      pe(pos, i) = static_cast<Scalar>(std::sin(angle));
      if (i + 1 < d_model) pe(pos, i + 1) = static_cast<Scalar>(std::cos(angle));
    }
  }
  return pe;
}

// Row-wise softmax in place over the first `valid` columns of each row
// (entries at column >= valid(row) are treated as masked and set to 0).
// valid_cols(i) = row length for causal masks, or cols for full attention.
template <class Scalar, class ValidFn>
void masked_softmax_rows_inplace(Mat<Scalar>& scores, ValidFn valid_cols) {
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const Eigen::Index n = valid_cols(i);
    auto row = scores.row(i).head(n);
    const Scalar m = row.maxCoeff();
    row = (row.array() - m).exp();
    row /= row.sum();
    if (n < scores.cols()) scores.row(i).tail(scores.cols() - n).setZero();
  }
}

// d(softmax)/d(scores) given the softmax output A and upstream dA, written
// into dA in place: dS = A .* (dA - rowsum(A .* dA)).
template <class Scalar>
void softmax_backward_inplace(const Mat<Scalar>& attn, Mat<Scalar>& d_attn) {
  for (Eigen::Index i = 0; i < attn.rows(); ++i) {
    const Scalar dot = attn.row(i).dot(d_attn.row(i));
    d_attn.row(i) = attn.row(i).cwiseProduct(
        (d_attn.row(i).array() - dot).matrix());
  }
}

}  // namespace cipherscale::nn
