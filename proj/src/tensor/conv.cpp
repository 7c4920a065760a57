#include <Eigen/Core>
#include <stdexcept>

#include "satgan/ops.hpp"

namespace satgan {

namespace {

using RowMatrix = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

struct Geometry {
  int channels, height, width;   // the image side
  int kh, kw, stride, padding;
  int out_h, out_w;              // the column side
  int rows() const { return channels * kh * kw; }
  int cols() const { return out_h * out_w; }
};

// cols[(c,ky,kx), (oy,ox)] = image[c, oy*s - p + ky, ox*s - p + kx]
void im2col(const real* image, const Geometry& g, real* cols) {
  const int ncols = g.cols();
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        real* row = cols + static_cast<std::ptrdiff_t>(((c * g.kh + ky) * g.kw + kx)) * ncols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.padding + ky;
          real* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, 0.0f);
            continue;
          }
          const real* src = image + (static_cast<std::ptrdiff_t>(c) * g.height + iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.padding + kx;
            dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates columns back into the image.
void col2im(const real* cols, const Geometry& g, real* image) {
  const int ncols = g.cols();
  for (int c = 0; c < g.channels; ++c) {
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const real* row = cols + static_cast<std::ptrdiff_t>(((c * g.kh + ky) * g.kw + kx)) * ncols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= g.height) continue;
          real* dst = image + (static_cast<std::ptrdiff_t>(c) * g.height + iy) * g.width;
          const real* src = row + oy * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.padding + kx;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void require_rank4(const Tensor& t, const char* what) {
  if (t.rank() != 4) throw std::invalid_argument(std::string(what) + " must be rank 4, got " + shape_string(t.shape()));
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding) {
  require_rank4(input, "conv2d input");
  require_rank4(kernel, "conv2d kernel");
  if (stride < 1 || padding < 0) throw std::invalid_argument("conv2d: stride must be >= 1 and padding >= 0");
  const int n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int cout = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kernel.dim(1) != cin) {
    throw std::invalid_argument("conv2d: input has " + std::to_string(cin) + " channels, kernel expects " +
                                std::to_string(kernel.dim(1)));
  }
  if (kh > h + 2 * padding || kw > w + 2 * padding) throw std::invalid_argument("conv2d: kernel larger than padded input");
  const Geometry g{cin, h, w, kh, kw, stride, padding, (h + 2 * padding - kh) / stride + 1, (w + 2 * padding - kw) / stride + 1};

  const bool rec = detail::recording({&input, &kernel});
  const std::size_t col_size = static_cast<std::size_t>(g.rows()) * g.cols();
  // Columns are kept for the kernel gradient only when it is needed.
  const bool keep_cols = rec && kernel.requires_grad();
  std::vector<real> saved_cols(keep_cols ? col_size * static_cast<std::size_t>(n) : 0);
  std::vector<real> scratch(keep_cols ? 0 : col_size);
  std::vector<real> out(static_cast<std::size_t>(n) * cout * g.cols());
  const ConstMatMap k(kernel.data().data(), cout, g.rows());
  const auto x = input.data();
  for (int b = 0; b < n; ++b) {
    real* cols = keep_cols ? saved_cols.data() + static_cast<std::size_t>(b) * col_size : scratch.data();
    im2col(x.data() + static_cast<std::size_t>(b) * cin * h * w, g, cols);
    MatMap o(out.data() + static_cast<std::size_t>(b) * cout * g.cols(), cout, g.cols());
    o.noalias() = k * ConstMatMap(cols, g.rows(), g.cols());
  }

  Tensor result = detail::make_result(Shape{n, cout, g.out_h, g.out_w}, std::move(out), rec);
  if (rec) {
    Tape::active()->record({input, kernel}, result,
                           [input, kernel, g, n, cout, col_size, saved = std::move(saved_cols)](std::span<const real> grad) mutable {
      const std::size_t out_per = static_cast<std::size_t>(cout) * g.cols();
      const std::size_t in_per = static_cast<std::size_t>(g.channels) * g.height * g.width;
      if (kernel.requires_grad()) {
        MatMap gk(kernel.grad_buffer().data(), cout, g.rows());
        for (int b = 0; b < n; ++b) {
          const ConstMatMap go(grad.data() + b * out_per, cout, g.cols());
          const ConstMatMap cols(saved.data() + static_cast<std::size_t>(b) * col_size, g.rows(), g.cols());
          gk.noalias() += go * cols.transpose();
        }
      }
      if (input.requires_grad()) {
        const ConstMatMap k(kernel.data().data(), cout, g.rows());
        std::vector<real> dcols(col_size);
        real* gi = input.grad_buffer().data();
        for (int b = 0; b < n; ++b) {
          const ConstMatMap go(grad.data() + b * out_per, cout, g.cols());
          MatMap dc(dcols.data(), g.rows(), g.cols());
          dc.noalias() = k.transpose() * go;
          col2im(dcols.data(), g, gi + b * in_per);
        }
      }
    });
  }
  return result;
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, int stride, int padding) {
  require_rank4(input, "conv_transpose2d input");
  require_rank4(kernel, "conv_transpose2d kernel");
  if (stride < 1 || padding < 0) throw std::invalid_argument("conv_transpose2d: stride must be >= 1 and padding >= 0");
  const int n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int cout = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kernel.dim(0) != cin) {
    throw std::invalid_argument("conv_transpose2d: input has " + std::to_string(cin) + " channels, kernel expects " +
                                std::to_string(kernel.dim(0)));
  }
  const int out_h = (h - 1) * stride - 2 * padding + kh;
  const int out_w = (w - 1) * stride - 2 * padding + kw;
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("conv_transpose2d: empty output");
  // Geometry of the equivalent forward convolution from output back to input.
  const Geometry g{cout, out_h, out_w, kh, kw, stride, padding, h, w};

  const std::size_t col_size = static_cast<std::size_t>(g.rows()) * g.cols();
  const std::size_t in_per = static_cast<std::size_t>(cin) * h * w;
  const std::size_t out_per = static_cast<std::size_t>(cout) * out_h * out_w;
  std::vector<real> cols(col_size);
  std::vector<real> out(static_cast<std::size_t>(n) * out_per, 0.0f);
  const ConstMatMap k(kernel.data().data(), cin, g.rows());
  const auto x = input.data();
  for (int b = 0; b < n; ++b) {
    MatMap c(cols.data(), g.rows(), g.cols());
    c.noalias() = k.transpose() * ConstMatMap(x.data() + b * in_per, cin, g.cols());
    col2im(cols.data(), g, out.data() + b * out_per);
  }

  const bool rec = detail::recording({&input, &kernel});
  Tensor result = detail::make_result(Shape{n, cout, out_h, out_w}, std::move(out), rec);
  if (rec) {
    Tape::active()->record({input, kernel}, result,
                           [input, kernel, g, n, cin, col_size, in_per, out_per](std::span<const real> grad) mutable {
      std::vector<real> gcols(col_size);
      const ConstMatMap k(kernel.data().data(), cin, g.rows());
      const auto x = input.data();
      for (int b = 0; b < n; ++b) {
        im2col(grad.data() + b * out_per, g, gcols.data());
        const ConstMatMap gc(gcols.data(), g.rows(), g.cols());
        if (input.requires_grad()) {
          MatMap gi(input.grad_buffer().data() + b * in_per, cin, g.cols());
          gi.noalias() += k * gc;
        }
        if (kernel.requires_grad()) {
          MatMap gk(kernel.grad_buffer().data(), cin, g.rows());
          gk.noalias() += ConstMatMap(x.data() + b * in_per, cin, g.cols()) * gc.transpose();
        }
      }
    });
  }
  return result;
}

Tensor add_channel_bias(const Tensor& input, const Tensor& bias) {
  if (input.rank() < 2 || bias.numel() != static_cast<std::size_t>(input.dim(1))) {
    throw std::invalid_argument("add_channel_bias: bias " + shape_string(bias.shape()) + " does not match " +
                                shape_string(input.shape()));
  }
  const std::size_t n = static_cast<std::size_t>(input.dim(0));
  const std::size_t c = static_cast<std::size_t>(input.dim(1));
  const std::size_t inner = input.numel() / (n * c);
  const auto x = input.data();
  const auto bv = bias.data();
  std::vector<real> out(x.begin(), x.end());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      real* p = out.data() + (b * c + ch) * inner;
      for (std::size_t i = 0; i < inner; ++i) p[i] += bv[ch];
    }
  const bool rec = detail::recording({&input, &bias});
  Tensor result = detail::make_result(input.shape(), std::move(out), rec);
  if (rec) {
    Tape::active()->record({input, bias}, result, [input, bias, n, c, inner](std::span<const real> g) mutable {
      if (input.requires_grad()) {
        auto gi = input.grad_buffer();
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad_buffer();
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t ch = 0; ch < c; ++ch) {
            const real* p = g.data() + (b * c + ch) * inner;
            double acc = 0.0;
            for (std::size_t i = 0; i < inner; ++i) acc += p[i];
            gb[ch] += static_cast<real>(acc);
          }
      }
    });
  }
  return result;
}

}  // namespace satgan
