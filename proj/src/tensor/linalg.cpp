#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "satgan/ops.hpp"

namespace satgan {

namespace {
using RowMatrix = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const bool batched = a.rank() == 3;
  if (!((a.rank() == 2 && b.rank() == 2) || (a.rank() == 3 && b.rank() == 3))) {
    throw std::invalid_argument("matmul: expected rank-2 or rank-3 operands, got " + shape_string(a.shape()) + " x " +
                                shape_string(b.shape()));
  }
  const int batch = batched ? a.dim(0) : 1;
  const int m = a.dim(-2), k = a.dim(-1), n = b.dim(-1);
  if (b.dim(-2) != k || (batched && b.dim(0) != batch)) {
    throw std::invalid_argument("matmul: dimension mismatch " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  const std::size_t sa = static_cast<std::size_t>(m) * k, sb = static_cast<std::size_t>(k) * n,
                    so = static_cast<std::size_t>(m) * n;
  std::vector<real> out(static_cast<std::size_t>(batch) * so);
  for (int i = 0; i < batch; ++i) {
    MatMap(out.data() + i * so, m, n).noalias() =
        ConstMatMap(a.data().data() + i * sa, m, k) * ConstMatMap(b.data().data() + i * sb, k, n);
  }
  const Shape shape = batched ? Shape{batch, m, n} : Shape{m, n};
  const bool rec = detail::recording({&a, &b});
  Tensor result = detail::make_result(shape, std::move(out), rec);
  if (rec) {
    Tape::active()->record({a, b}, result, [a, b, batch, m, k, n, sa, sb, so](std::span<const real> g) mutable {
      for (int i = 0; i < batch; ++i) {
        const ConstMatMap go(g.data() + i * so, m, n);
        if (a.requires_grad()) {
          MatMap(a.grad_buffer().data() + i * sa, m, k).noalias() += go * ConstMatMap(b.data().data() + i * sb, k, n).transpose();
        }
        if (b.requires_grad()) {
          MatMap(b.grad_buffer().data() + i * sb, k, n).noalias() += ConstMatMap(a.data().data() + i * sa, m, k).transpose() * go;
        }
      }
    });
  }
  return result;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() < 2) throw std::invalid_argument("transpose: rank must be >= 2");
  std::vector<int> perm(static_cast<std::size_t>(a.rank()));
  for (int i = 0; i < a.rank(); ++i) perm[static_cast<std::size_t>(i)] = i;
  std::swap(perm[perm.size() - 1], perm[perm.size() - 2]);
  return permute(a, perm);
}

Tensor softmax(const Tensor& input, int axis) {
  const int r = input.rank();
  const int ax = axis < 0 ? axis + r : axis;
  if (ax < 0 || ax >= r) throw std::out_of_range("softmax: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= static_cast<std::size_t>(input.dim(i));
  for (int i = ax + 1; i < r; ++i) inner *= static_cast<std::size_t>(input.dim(i));
  const std::size_t len = static_cast<std::size_t>(input.dim(ax));

  const auto x = input.data();
  std::vector<real> out(x.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      real mx = x[base];
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, x[base + j * inner]);
      double total = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        const real e = std::exp(x[base + j * inner] - mx);
        out[base + j * inner] = e;
        total += e;
      }
      const real inv = static_cast<real>(1.0 / total);
      for (std::size_t j = 0; j < len; ++j) out[base + j * inner] *= inv;
    }
  }

  const bool rec = detail::recording({&input});
  Tensor result = detail::make_result(input.shape(), std::move(out), rec);
  if (rec) {
    Tensor y = result;
    Tape::active()->record({input}, result, [input, y, outer, inner, len](std::span<const real> g) mutable {
      auto gi = input.grad_buffer();
      const auto p = y.data();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * len * inner + in;
          double dot = 0.0;
          for (std::size_t j = 0; j < len; ++j) dot += static_cast<double>(g[base + j * inner]) * p[base + j * inner];
          for (std::size_t j = 0; j < len; ++j) {
            const std::size_t idx = base + j * inner;
            gi[idx] += static_cast<real>(p[idx] * (g[idx] - dot));
          }
        }
      }
    });
  }
  return result;
}

}  // namespace satgan
