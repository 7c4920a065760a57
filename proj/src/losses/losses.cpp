#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "satgan/losses.hpp"
#include "satgan/ops.hpp"

namespace satgan {

void LossWeights::validate() const {
  if (alpha < 0.0f || beta < 0.0f || lambda < 0.0f || gamma < 0.0f) {
    throw std::invalid_argument("loss weights must be >= 0");
  }
}

void NoiseFieldSpec::validate() const {
  if (sigma_z < 0.0f || sigma_w < 0.0f) throw std::invalid_argument("noise field standard deviations must be >= 0");
}

Tensor compose_fake(const Tensor& c, const Tensor& n_tilde) {
  if (c.shape() != n_tilde.shape()) {
    throw std::invalid_argument("compose_fake: context " + shape_string(c.shape()) + " vs noise " +
                                shape_string(n_tilde.shape()));
  }
  return clamp(add(c, n_tilde), 0.0f, 1.0f);
}

Tensor bce_with_logits(const Tensor& logits, bool target) {
  // -log sigmoid(l) = softplus(-l) and -log(1 - sigmoid(l)) = softplus(l).
  // Clamping the probability to [eps, 1-eps] is clamping l to [-L, L].
  const double bound = std::log((1.0 - kProbabilityClamp) / kProbabilityClamp);
  const double sign = target ? -1.0 : 1.0;
  auto softplus = [](double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); };
  const auto l = logits.data();
  const double n = static_cast<double>(l.size());
  double acc = 0.0;
  for (real v : l) acc += softplus(sign * std::clamp(static_cast<double>(v), -bound, bound));
  const bool rec = detail::recording({&logits});
  Tensor result = detail::make_result(Shape{1}, {static_cast<real>(acc / n)}, rec);
  if (rec) {
    Tape::active()->record({logits}, result, [logits, sign, bound, n](std::span<const real> g) mutable {
      auto gl = logits.grad_buffer();
      const auto l = logits.data();
      for (std::size_t i = 0; i < l.size(); ++i) {
        const double v = l[i];
        if (v < -bound || v > bound) continue;
        const double s = 1.0 / (1.0 + std::exp(-sign * v));  // d softplus(sign v) / d(sign v)
        gl[i] += static_cast<real>(g[0] * sign * s / n);
      }
    });
  }
  return result;
}

Tensor generator_loss(const Tensor& d_logits_fake, const Tensor& x_hat, const Tensor& x, const LossWeights& weights) {
  if (x_hat.shape() != x.shape()) {
    throw std::invalid_argument("generator_loss: x_hat " + shape_string(x_hat.shape()) + " vs x " + shape_string(x.shape()));
  }
  Tensor adversarial = bce_with_logits(d_logits_fake, true);
  if (weights.alpha == 0.0f) return adversarial;
  return add(affine(mean(abs(sub(x_hat, x))), weights.alpha), adversarial);
}

Tensor discriminator_loss(const Tensor& d_logits_real, const Tensor& d_logits_fake) {
  return add(bce_with_logits(d_logits_real, true), bce_with_logits(d_logits_fake, false));
}

Tensor task_loss(const Tensor& f_real, const Tensor& f_fake, const LossWeights& weights) {
  Tensor fake = affine(f_fake, weights.beta);
  return f_real.defined() ? add(f_real, fake) : fake;
}

Tensor task_loss(const Tensor& pred_real, const std::optional<std::vector<Labels>>& y, const Tensor& pred_fake,
                 const std::vector<Labels>& y_c, const LossWeights& weights, const YoloLossConfig& config) {
  const Tensor f_real = y ? yolo_task_loss(pred_real, *y, config) : Tensor{};
  return task_loss(f_real, yolo_task_loss(pred_fake, y_c, config), weights);
}

double total_loss(double l_g, double l_d, double l_t, const LossWeights& weights) {
  return l_g + weights.lambda * l_d + weights.gamma * l_t;
}

}  // namespace satgan
