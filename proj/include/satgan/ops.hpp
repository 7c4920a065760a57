#pragma once

#include <vector>

#include "satgan/tensor.hpp"

namespace satgan {

enum class Elementwise {
  add,
  subtract,
  multiply,
  negate,
  exp,
  log,
  tanh,
  sigmoid,
  leaky_relu,
  relu,
  abs,
};

/// Applies `kind` elementwise. Binary kinds take `b` of equal shape or a
/// single-element `b`/`a` acting as a scalar. `param` is the negative slope of
/// leaky_relu. log throws std::domain_error on non-positive input.
Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b = Tensor{}, real param = 0.2f);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::subtract, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::multiply, a, b); }
inline Tensor neg(const Tensor& a) { return elementwise(Elementwise::negate, a); }
inline Tensor exp(const Tensor& a) { return elementwise(Elementwise::exp, a); }
inline Tensor log(const Tensor& a) { return elementwise(Elementwise::log, a); }
inline Tensor tanh(const Tensor& a) { return elementwise(Elementwise::tanh, a); }
inline Tensor sigmoid(const Tensor& a) { return elementwise(Elementwise::sigmoid, a); }
inline Tensor leaky_relu(const Tensor& a, real slope) { return elementwise(Elementwise::leaky_relu, a, Tensor{}, slope); }
inline Tensor relu(const Tensor& a) { return elementwise(Elementwise::relu, a); }
inline Tensor abs(const Tensor& a) { return elementwise(Elementwise::abs, a); }

/// a * scale + offset for constant scale and offset.
Tensor affine(const Tensor& a, real scale, real offset = 0.0f);
/// Clamps into [lo, hi]; gradient passes only where the input was inside.
Tensor clamp(const Tensor& a, real lo, real hi);
/// Rounds to the nearest multiple of `step`; the gradient passes straight through.
Tensor quantize(const Tensor& a, real step);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);
/// Concatenates along `axis`; all other dimensions must agree.
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, int begin, int end);
/// General axis permutation; result dim i is input dim perm[i].
Tensor permute(const Tensor& a, const std::vector<int>& perm);

/// Cross-correlation of x[N,Cin,H,W] with kernel[Cout,Cin,kH,kW].
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding);
/// Transposed convolution, x[N,Cin,H,W] with kernel[Cin,Cout,kH,kW]; the
/// adjoint of conv2d with the same kernel.
Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, int stride, int padding);
/// x[N,C,...] + bias[C] broadcast over every position.
Tensor add_channel_bias(const Tensor& input, const Tensor& bias);

inline constexpr real kNormEpsilon = 1e-5f;
Tensor instance_norm(const Tensor& input, const Tensor& scale, const Tensor& shift, real eps = kNormEpsilon);

/// [M,K]x[K,N], or batched [B,M,K]x[B,K,N].
Tensor matmul(const Tensor& a, const Tensor& b);
/// Swaps the last two axes.
Tensor transpose(const Tensor& a);
Tensor softmax(const Tensor& input, int axis);

}  // namespace satgan
