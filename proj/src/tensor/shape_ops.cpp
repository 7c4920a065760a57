#include <numeric>
#include <stdexcept>

#include "satgan/ops.hpp"

namespace satgan {

namespace {

int normalize_axis(int axis, int rank) {
  const int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) throw std::out_of_range("axis " + std::to_string(axis) + " out of range");
  return a;
}

// outer x axis x inner decomposition of a shape around `axis`.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& s, int axis) {
  AxisSplit r;
  for (int i = 0; i < axis; ++i) r.outer *= static_cast<std::size_t>(s[static_cast<std::size_t>(i)]);
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i) r.inner *= static_cast<std::size_t>(s[i]);
  return r;
}

}  // namespace

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw std::invalid_argument("reshape: " + shape_string(a.shape()) + " -> " + shape_string(shape));
  }
  const auto src = a.data();
  const bool rec = detail::recording({&a});
  Tensor result = detail::make_result(std::move(shape), std::vector<real>(src.begin(), src.end()), rec);
  if (rec) {
    Tape::active()->record({a}, result, [a](std::span<const real> g) mutable {
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    });
  }
  return result;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& first = parts.front().shape();
  const int ax = normalize_axis(axis, static_cast<int>(first.size()));
  Shape out_shape = first;
  out_shape[static_cast<std::size_t>(ax)] = 0;
  for (const Tensor& p : parts) {
    Shape s = p.shape();
    if (s.size() != first.size()) throw std::invalid_argument("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (static_cast<int>(i) != ax && s[i] != first[i]) {
        throw std::invalid_argument("concat: shape mismatch " + shape_string(s) + " vs " + shape_string(first));
      }
    }
    out_shape[static_cast<std::size_t>(ax)] += s[static_cast<std::size_t>(ax)];
  }
  const AxisSplit sp = split_at(out_shape, ax);
  const std::size_t out_axis = static_cast<std::size_t>(out_shape[static_cast<std::size_t>(ax)]);
  std::vector<real> out(shape_numel(out_shape));
  std::size_t offset = 0;
  std::vector<std::size_t> offsets;
  for (const Tensor& p : parts) {
    const std::size_t len = static_cast<std::size_t>(p.dim(ax));
    const auto src = p.data();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(o * len * sp.inner), len * sp.inner,
                  out.begin() + static_cast<std::ptrdiff_t>((o * out_axis + offset) * sp.inner));
    }
    offsets.push_back(offset);
    offset += len;
  }

  std::vector<const Tensor*> ptrs;
  bool rec = false;
  for (const Tensor& p : parts) rec = rec || detail::recording({&p});
  Tensor result = detail::make_result(out_shape, std::move(out), rec);
  if (rec) {
    Tape::active()->record(parts, result, [parts, offsets, sp, out_axis, ax](std::span<const real> g) mutable {
      for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& p = parts[k];
        if (!p.requires_grad()) continue;
        const std::size_t len = static_cast<std::size_t>(p.dim(ax));
        auto gp = p.grad_buffer();
        for (std::size_t o = 0; o < sp.outer; ++o) {
          const real* src = g.data() + (o * out_axis + offsets[k]) * sp.inner;
          real* dst = gp.data() + o * len * sp.inner;
          for (std::size_t i = 0; i < len * sp.inner; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return result;
}

Tensor slice(const Tensor& a, int axis, int begin, int end) {
  const int ax = normalize_axis(axis, a.rank());
  const int len_in = a.dim(ax);
  if (begin < 0 || end > len_in || begin >= end) {
    throw std::out_of_range("slice: [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                            shape_string(a.shape()));
  }
  Shape out_shape = a.shape();
  out_shape[static_cast<std::size_t>(ax)] = end - begin;
  const AxisSplit sp = split_at(a.shape(), ax);
  const std::size_t len = static_cast<std::size_t>(end - begin);
  const std::size_t in_axis = static_cast<std::size_t>(len_in);
  const std::size_t b0 = static_cast<std::size_t>(begin);
  std::vector<real> out(shape_numel(out_shape));
  const auto src = a.data();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((o * in_axis + b0) * sp.inner), len * sp.inner,
                out.begin() + static_cast<std::ptrdiff_t>(o * len * sp.inner));
  }
  const bool rec = detail::recording({&a});
  Tensor result = detail::make_result(out_shape, std::move(out), rec);
  if (rec) {
    Tape::active()->record({a}, result, [a, sp, len, in_axis, b0](std::span<const real> g) mutable {
      auto ga = a.grad_buffer();
      for (std::size_t o = 0; o < sp.outer; ++o) {
        real* dst = ga.data() + (o * in_axis + b0) * sp.inner;
        const real* s = g.data() + o * len * sp.inner;
        for (std::size_t i = 0; i < len * sp.inner; ++i) dst[i] += s[i];
      }
    });
  }
  return result;
}

Tensor permute(const Tensor& a, const std::vector<int>& perm) {
  const int r = a.rank();
  if (static_cast<int>(perm.size()) != r) throw std::invalid_argument("permute: rank mismatch");
  std::vector<int> seen(static_cast<std::size_t>(r), 0);
  for (int p : perm) {
    if (p < 0 || p >= r || seen[static_cast<std::size_t>(p)]++) throw std::invalid_argument("permute: invalid axes");
  }
  const Shape& in_shape = a.shape();
  Shape out_shape(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) out_shape[static_cast<std::size_t>(i)] = in_shape[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];

  std::vector<std::size_t> in_stride(static_cast<std::size_t>(r), 1);
  for (int i = r - 2; i >= 0; --i) {
    in_stride[static_cast<std::size_t>(i)] = in_stride[static_cast<std::size_t>(i) + 1] * static_cast<std::size_t>(in_shape[static_cast<std::size_t>(i) + 1]);
  }
  // For each output element, the flat index of its source.
  const std::size_t n = a.numel();
  std::vector<std::size_t> source(n);
  std::vector<int> idx(static_cast<std::size_t>(r), 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    std::size_t src = 0;
    for (int i = 0; i < r; ++i) src += static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]) * in_stride[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    source[flat] = src;
    for (int i = r - 1; i >= 0; --i) {
      if (++idx[static_cast<std::size_t>(i)] < out_shape[static_cast<std::size_t>(i)]) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
  }
  const auto x = a.data();
  std::vector<real> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[source[i]];
  const bool rec = detail::recording({&a});
  Tensor result = detail::make_result(out_shape, std::move(out), rec);
  if (rec) {
    Tape::active()->record({a}, result, [a, source = std::move(source)](std::span<const real> g) mutable {
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < source.size(); ++i) ga[source[i]] += g[i];
    });
  }
  return result;
}

}  // namespace satgan
