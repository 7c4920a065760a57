#include <stdexcept>

#include "satgan/networks.hpp"
#include "satgan/ops.hpp"

namespace satgan {

namespace {

// 1x1 convolution flattened to [N, Cout, H*W].
Tensor project(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  Tensor y = conv2d(x, kernel, 1, 0);
  if (bias.defined()) y = add_channel_bias(y, bias);
  return reshape(y, {y.dim(0), y.dim(1), y.dim(2) * y.dim(3)});
}

}  // namespace

Tensor attention_forward(const Tensor& x, const SelfAttentionParams& p, Tensor* weights) {
  if (x.rank() != 4) throw std::invalid_argument("attention_forward: expected [N,C,H,W], got " + shape_string(x.shape()));
  const Tensor q = project(x, p.query_kernel, p.query_bias);
  const Tensor k = project(x, p.key_kernel, Tensor{});
  const Tensor v = project(x, p.value_kernel, p.value_bias);
  // energy[n, i, j] = <q_i, k_j>; each row i is normalized over positions j.
  const Tensor attn = softmax(matmul(transpose(q), k), -1);
  if (weights) *weights = attn;
  const Tensor mixed = reshape(matmul(v, transpose(attn)), x.shape());
  return add(x, mul(p.gamma, mixed));
}

}  // namespace satgan
