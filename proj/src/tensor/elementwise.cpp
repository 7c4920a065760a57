#include <cmath>
#include <stdexcept>

#include "satgan/ops.hpp"

namespace satgan {

namespace {

bool is_binary(Elementwise kind) {
  return kind == Elementwise::add || kind == Elementwise::subtract || kind == Elementwise::multiply;
}

real stable_sigmoid(real x) {
  if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
  const real e = std::exp(x);
  return e / (1.0f + e);
}

Tensor binary(Elementwise kind, const Tensor& a, const Tensor& b) {
  const bool a_scalar = a.numel() == 1;
  const bool b_scalar = b.numel() == 1;
  if (a.shape() != b.shape() && !a_scalar && !b_scalar) {
    throw std::invalid_argument("elementwise: shape mismatch " + shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
  const Shape out_shape = (a_scalar && !b_scalar) ? b.shape() : a.shape();
  const std::size_t n = shape_numel(out_shape);
  const auto av = a.data();
  const auto bv = b.data();
  const std::size_t sa = a_scalar ? 0 : 1;
  const std::size_t sb = b_scalar ? 0 : 1;

  std::vector<real> out(n);
  switch (kind) {
    case Elementwise::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i * sa] + bv[i * sb];
      break;
    case Elementwise::subtract:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i * sa] - bv[i * sb];
      break;
    default:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i * sa] * bv[i * sb];
      break;
  }

  const bool rec = detail::recording({&a, &b});
  Tensor result = detail::make_result(out_shape, std::move(out), rec);
  if (rec) {
    Tape::active()->record({a, b}, result, [kind, a, b, n, sa, sb](std::span<const real> g) mutable {
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        const auto bv = b.data();
        for (std::size_t i = 0; i < n; ++i) {
          const real d = kind == Elementwise::multiply ? g[i] * bv[i * sb] : g[i];
          ga[i * sa] += d;
        }
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        const auto av = a.data();
        for (std::size_t i = 0; i < n; ++i) {
          real d = g[i];
          if (kind == Elementwise::subtract) d = -d;
          if (kind == Elementwise::multiply) d *= av[i * sa];
          gb[i * sb] += d;
        }
      }
    });
  }
  return result;
}

Tensor unary(Elementwise kind, const Tensor& a, real param) {
  const std::size_t n = a.numel();
  const auto x = a.data();
  std::vector<real> out(n);
  switch (kind) {
    case Elementwise::negate:
      for (std::size_t i = 0; i < n; ++i) out[i] = -x[i];
      break;
    case Elementwise::exp:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
      break;
    case Elementwise::log:
      for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0f)) throw std::domain_error("log of non-positive value " + std::to_string(x[i]));
        out[i] = std::log(x[i]);
      }
      break;
    case Elementwise::tanh:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
      break;
    case Elementwise::sigmoid:
      for (std::size_t i = 0; i < n; ++i) out[i] = stable_sigmoid(x[i]);
      break;
    case Elementwise::leaky_relu:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : param * x[i];
      break;
    case Elementwise::relu:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
      break;
    case Elementwise::abs:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::fabs(x[i]);
      break;
    default:
      throw std::logic_error("unary: not a unary kind");
  }

  const bool rec = detail::recording({&a});
  Tensor result = detail::make_result(a.shape(), std::move(out), rec);
  if (rec) {
    Tensor y = result;
    Tape::active()->record({a}, result, [kind, a, param, n, y](std::span<const real> g) mutable {
      auto ga = a.grad_buffer();
      const auto x = a.data();
      const auto out = y.data();
      for (std::size_t i = 0; i < n; ++i) {
        real d = 0.0f;
        switch (kind) {
          case Elementwise::negate: d = -1.0f; break;
          case Elementwise::exp: d = out[i]; break;
          case Elementwise::log: d = 1.0f / x[i]; break;
          case Elementwise::tanh: d = 1.0f - out[i] * out[i]; break;
          case Elementwise::sigmoid: d = out[i] * (1.0f - out[i]); break;
          case Elementwise::leaky_relu: d = x[i] > 0.0f ? 1.0f : param; break;
          case Elementwise::relu: d = x[i] > 0.0f ? 1.0f : 0.0f; break;
          case Elementwise::abs: d = x[i] > 0.0f ? 1.0f : (x[i] < 0.0f ? -1.0f : 0.0f); break;
          default: break;
        }
        ga[i] += g[i] * d;
      }
    });
  }
  return result;
}

}  // namespace

Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b, real param) {
  if (is_binary(kind)) {
    if (!b.defined()) throw std::invalid_argument("elementwise: binary kind needs two operands");
    return binary(kind, a, b);
  }
  return unary(kind, a, param);
}

Tensor affine(const Tensor& a, real scale, real offset) {
  const std::size_t n = a.numel();
  const auto x = a.data();
  std::vector<real> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * scale + offset;
  const bool rec = detail::recording({&a});
  Tensor result = detail::make_result(a.shape(), std::move(out), rec);
  if (rec) {
    Tape::active()->record({a}, result, [a, scale, n](std::span<const real> g) mutable {
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * scale;
    });
  }
  return result;
}

Tensor clamp(const Tensor& a, real lo, real hi) {
  const std::size_t n = a.numel();
  const auto x = a.data();
  std::vector<real> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] < lo ? lo : (x[i] > hi ? hi : x[i]);
  const bool rec = detail::recording({&a});
  Tensor result = detail::make_result(a.shape(), std::move(out), rec);
  if (rec) {
    Tape::active()->record({a}, result, [a, lo, hi, n](std::span<const real> g) mutable {
      auto ga = a.grad_buffer();
      const auto x = a.data();
      for (std::size_t i = 0; i < n; ++i) {
        if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
      }
    });
  }
  return result;
}

Tensor quantize(const Tensor& a, real step) {
  if (!(step > 0.0f)) throw std::invalid_argument("quantize: step must be > 0");
  const std::size_t n = a.numel();
  const auto x = a.data();
  std::vector<real> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::nearbyint(x[i] / step) * step;
  const bool rec = detail::recording({&a});
  Tensor result = detail::make_result(a.shape(), std::move(out), rec);
  if (rec) {
    Tape::active()->record({a}, result, [a, n](std::span<const real> g) mutable {
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
    });
  }
  return result;
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (real v : a.data()) acc += v;
  const bool rec = detail::recording({&a});
  Tensor result = detail::make_result(Shape{1}, {static_cast<real>(acc)}, rec);
  if (rec) {
    Tape::active()->record({a}, result, [a](std::span<const real> g) mutable {
      for (real& v : a.grad_buffer()) v += g[0];
    });
  }
  return result;
}

Tensor mean(const Tensor& a) {
  double acc = 0.0;
  for (real v : a.data()) acc += v;
  const double n = static_cast<double>(a.numel());
  const bool rec = detail::recording({&a});
  Tensor result = detail::make_result(Shape{1}, {static_cast<real>(acc / n)}, rec);
  if (rec) {
    Tape::active()->record({a}, result, [a, n](std::span<const real> g) mutable {
      const real d = static_cast<real>(g[0] / n);
      for (real& v : a.grad_buffer()) v += d;
    });
  }
  return result;
}

}  // namespace satgan
