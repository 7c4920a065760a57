#include <cmath>
#include <stdexcept>

#include "satgan/ops.hpp"

namespace satgan {

Tensor instance_norm(const Tensor& input, const Tensor& scale, const Tensor& shift, real eps) {
  if (input.rank() != 4) throw std::invalid_argument("instance_norm: input must be [N,C,H,W], got " + shape_string(input.shape()));
  const std::size_t n = static_cast<std::size_t>(input.dim(0));
  const std::size_t c = static_cast<std::size_t>(input.dim(1));
  const std::size_t m = static_cast<std::size_t>(input.dim(2)) * static_cast<std::size_t>(input.dim(3));
  if (scale.numel() != c || shift.numel() != c) throw std::invalid_argument("instance_norm: scale/shift must have C entries");

  const auto x = input.data();
  const auto gam = scale.data();
  const auto bet = shift.data();
  std::vector<real> out(x.size());
  std::vector<real> xhat(x.size());
  std::vector<real> inv_std(n * c);
  for (std::size_t s = 0; s < n * c; ++s) {
    const real* p = x.data() + s * m;
    double mu = 0.0;
    for (std::size_t i = 0; i < m; ++i) mu += p[i];
    mu /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) var += (p[i] - mu) * (p[i] - mu);
    var /= static_cast<double>(m);
    const real is = static_cast<real>(1.0 / std::sqrt(var + eps));
    inv_std[s] = is;
    const std::size_t ch = s % c;
    for (std::size_t i = 0; i < m; ++i) {
      const real xh = static_cast<real>(p[i] - mu) * is;
      xhat[s * m + i] = xh;
      out[s * m + i] = gam[ch] * xh + bet[ch];
    }
  }

  const bool rec = detail::recording({&input, &scale, &shift});
  Tensor result = detail::make_result(input.shape(), std::move(out), rec);
  if (rec) {
    Tape::active()->record({input, scale, shift}, result,
                           [input, scale, shift, n, c, m, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                               std::span<const real> g) mutable {
      const auto gam = scale.data();
      real* gi = input.requires_grad() ? input.grad_buffer().data() : nullptr;
      real* gs = scale.requires_grad() ? scale.grad_buffer().data() : nullptr;
      real* gb = shift.requires_grad() ? shift.grad_buffer().data() : nullptr;
      for (std::size_t s = 0; s < n * c; ++s) {
        const std::size_t ch = s % c;
        const real* go = g.data() + s * m;
        const real* xh = xhat.data() + s * m;
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          sum_g += go[i];
          sum_gx += static_cast<double>(go[i]) * xh[i];
        }
        if (gs) gs[ch] += static_cast<real>(sum_gx);
        if (gb) gb[ch] += static_cast<real>(sum_g);
        if (gi) {
          // dx = scale * inv_std / m * (m*g - sum(g) - xhat*sum(g*xhat))
          const double k = static_cast<double>(gam[ch]) * inv_std[s] / static_cast<double>(m);
          for (std::size_t i = 0; i < m; ++i) {
            gi[s * m + i] += static_cast<real>(k * (static_cast<double>(m) * go[i] - sum_g - xh[i] * sum_gx));
          }
        }
      }
    });
  }
  return result;
}

}  // namespace satgan
