#pragma once

#include <optional>
#include <span>
#include <vector>

#include "satgan/scene.hpp"
#include "satgan/tensor.hpp"

namespace satgan {

struct LossWeights {
  real alpha = 100.0f;  // l1 reproduction
  real beta = 1.0f;     // fake-image task term
  real lambda = 1.0f;   // discriminator
  real gamma = 1.0f;    // task

  void validate() const;
};

struct NoiseFieldSpec {
  real mu_z = 0.0f;
  real sigma_z = 1.0f;
  // pix2pix: z = c + w, w ~ N(mu_w, sigma_w^2)
  real mu_w = 0.0f;
  real sigma_w = 1.0f;

  void validate() const;
};

/// Probabilities are clamped into [eps, 1 - eps] before every logarithm.
inline constexpr double kProbabilityClamp = 1e-7;

/// clip(c + n_tilde, 0, 1).
Tensor compose_fake(const Tensor& c, const Tensor& n_tilde);

/// Mean of -log(clamp(sigmoid(l))) for target 1, or -log(clamp(1 - sigmoid(l)))
/// for target 0, evaluated in logit space.
Tensor bce_with_logits(const Tensor& logits, bool target);

/// alpha * mean|x_hat - x| - mean log D(x_hat).
Tensor generator_loss(const Tensor& d_logits_fake, const Tensor& x_hat, const Tensor& x, const LossWeights& weights);
/// -mean log D(x) - mean log(1 - D(x_hat)).
Tensor discriminator_loss(const Tensor& d_logits_real, const Tensor& d_logits_fake);

struct YoloLossConfig {
  real coord_weight = 5.0f;
  real noobj_weight = 0.5f;
};

/// One responsible grid cell: cell-relative center and image-relative size.
struct CellTarget {
  int image = 0;
  int row = 0;
  int col = 0;
  real tx = 0.0f;
  real ty = 0.0f;
  real tw = 0.0f;
  real th = 0.0f;
};

struct GridTargets {
  int batch = 0;
  int grid_size = 0;
  std::vector<CellTarget> cells;
  /// Objects whose cell was already taken by an earlier object.
  int dropped = 0;
};

/// Throws std::invalid_argument for annotations outside the unit square.
GridTargets encode_targets(const std::vector<Labels>& labels, int grid_size);

/// IoU between each responsible cell's predicted box and its truth, in
/// `targets.cells` order; the default confidence target.
std::vector<real> confidence_targets(const Tensor& pred, const GridTargets& targets);

/// YOLO-style loss over activated predictions [N,S,S,5], divided by N.
/// `confidence_override` replaces the IoU confidence targets (one per cell in
/// targets.cells); the targets are constants either way.
Tensor yolo_task_loss(const Tensor& pred, const GridTargets& targets, const YoloLossConfig& config = {},
                      std::span<const real> confidence_override = {});
Tensor yolo_task_loss(const Tensor& pred, const std::vector<Labels>& labels, const YoloLossConfig& config = {});

/// f_real + beta * f_fake; an undefined f_real (unlabeled target) drops the term.
Tensor task_loss(const Tensor& f_real, const Tensor& f_fake, const LossWeights& weights);
Tensor task_loss(const Tensor& pred_real, const std::optional<std::vector<Labels>>& y, const Tensor& pred_fake,
                 const std::vector<Labels>& y_c, const LossWeights& weights, const YoloLossConfig& config = {});

/// L_G + lambda L_D + gamma L_T, reported for monitoring.
double total_loss(double l_g, double l_d, double l_t, const LossWeights& weights);

}  // namespace satgan
