#include <algorithm>
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "satgan/losses.hpp"
#include "satgan/networks.hpp"
#include "satgan/ops.hpp"
#include "loss_fixtures.hpp"
#include "test_util.hpp"

using namespace satgan;
using namespace satgan::testing;

namespace {

Tensor filled(Shape shape, real v) { return Tensor(std::move(shape), v); }

double clamped_log(double p) { return std::log(std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp)); }
double sigmoid_d(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Per-element cross-entropy written in probability space.
double reference_d_loss(const Tensor& real_logits, const Tensor& fake_logits) {
  double r = 0, f = 0;
  for (real v : real_logits.data()) r -= clamped_log(sigmoid_d(v));
  for (real v : fake_logits.data()) f -= clamped_log(1.0 - sigmoid_d(v));
  return r / static_cast<double>(real_logits.numel()) + f / static_cast<double>(fake_logits.numel());
}

double box_iou(double ax, double ay, double aw, double ah, double bx, double by, double bw, double bh) {
  const double iw = std::min(ax + aw / 2, bx + bw / 2) - std::max(ax - aw / 2, bx - bw / 2);
  const double ih = std::min(ay + ah / 2, by + bh / 2) - std::max(ay - ah / 2, by - bh / 2);
  if (iw <= 0 || ih <= 0) return 0;
  return iw * ih / (aw * ah + bw * bh - iw * ih);
}

// Walks every cell of every image; first annotation in a cell wins.
double reference_yolo(const Tensor& pred, const std::vector<Labels>& labels, double coord, double noobj) {
  const int n = pred.dim(0), s = pred.dim(1);
  const auto p = pred.data();
  double total = 0;
  for (int b = 0; b < n; ++b) {
    for (int r = 0; r < s; ++r) {
      for (int c = 0; c < s; ++c) {
        const real* v = p.data() + ((b * s + r) * s + c) * 5;
        const Annotation* owner = nullptr;
        for (const Annotation& a : labels[static_cast<std::size_t>(b)]) {
          const int ac = std::min(s - 1, static_cast<int>(std::floor(a.cx * s)));
          const int ar = std::min(s - 1, static_cast<int>(std::floor(a.cy * s)));
          if (ac == c && ar == r) {
            owner = &a;
            break;
          }
        }
        if (!owner) {
          total += noobj * v[0] * v[0];
          continue;
        }
        const double tx = owner->cx * s - c, ty = owner->cy * s - r;
        const double target_conf =
            box_iou((c + v[1]) / s, (r + v[2]) / s, v[3], v[4], owner->cx, owner->cy, owner->w, owner->h);
        total += coord * (std::pow(v[1] - tx, 2) + std::pow(v[2] - ty, 2) + std::pow(std::sqrt(v[3]) - std::sqrt(owner->w), 2) +
                          std::pow(std::sqrt(v[4]) - std::sqrt(owner->h), 2));
        total += std::pow(v[0] - target_conf, 2);
      }
    }
  }
  return total / n;
}

}  // namespace

TEST_CASE("compose_fake") {
  const Tensor c = filled({1, 1, 4, 4}, 0.5f);
  const Tensor zero = compose_fake(c, filled({1, 1, 4, 4}, 0.0f));
  CHECK(std::equal(zero.data().begin(), zero.data().end(), c.data().begin()));
  const Tensor up = compose_fake(c, filled({1, 1, 4, 4}, 0.2f));
  for (real v : up.data()) CHECK(v == doctest::Approx(0.7));
  const Tensor high = compose_fake(c, filled({1, 1, 4, 4}, 0.8f)), low = compose_fake(c, filled({1, 1, 4, 4}, -0.8f));
  for (real v : high.data()) CHECK(v == 1.0f);
  for (real v : low.data()) CHECK(v == 0.0f);
  CHECK_THROWS_AS(compose_fake(c, filled({1, 1, 4, 3}, 0.0f)), std::invalid_argument);
}

TEST_CASE("compose_fake on the pixel grid reproduces the noise bit-exactly") {
  Rng rng(21);
  int unclipped = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Tensor c = uniform_tensor({1, 1, 16, 16}, rng, 0.0f, 1.0f);
    Tensor n = uniform_tensor({1, 1, 16, 16}, rng, -0.5f, 0.5f);
    for (real& v : c.mutable_data()) v = to_pixel_grid(v);
    for (real& v : n.mutable_data()) v = to_pixel_grid(v);
    const Tensor x = compose_fake(c, n);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const real sum = c.data()[i] + n.data()[i];
      if (sum <= 0.0f || sum >= 1.0f) continue;
      ++unclipped;
      const real diff = x.data()[i] - c.data()[i];
      CHECK(std::memcmp(&diff, &n.data()[i], sizeof diff) == 0);
    }
  }
  CHECK(unclipped > 2000);
}

TEST_CASE("generator_loss examples") {
  const Tensor x = filled({2, 1, 4, 4}, 0.3f);
  CHECK(generator_loss(filled({2, 1, 3, 3}, 0.0f), x, x, LossWeights{}).item() == doctest::Approx(std::log(2.0)));
  const Tensor x_hat = filled({2, 1, 4, 4}, 0.4f);
  CHECK(generator_loss(filled({2, 1, 3, 3}, 30.0f), x_hat, x, LossWeights{}).item() == doctest::Approx(10.0).epsilon(1e-4));
  LossWeights no_l1;
  no_l1.alpha = 0.0f;
  CHECK(generator_loss(filled({1}, 0.0f), x_hat, x, no_l1).item() == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(generator_loss(filled({1}, 0.0f), x_hat, filled({2, 1, 4, 3}, 0.0f), LossWeights{}),
                  std::invalid_argument);
}

TEST_CASE("generator_loss decreases as the discriminator is fooled") {
  Rng rng(3);
  const Tensor x = uniform_tensor({1, 1, 8, 8}, rng, 0, 1), x_hat = uniform_tensor({1, 1, 8, 8}, rng, 0, 1);
  real prev = generator_loss(filled({1, 1, 3, 3}, -20.0f), x_hat, x, LossWeights{}).item();
  for (real l : {-3.0f, -0.5f, 0.0f, 1.0f, 4.0f}) {
    const real cur = generator_loss(filled({1, 1, 3, 3}, l), x_hat, x, LossWeights{}).item();
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("discriminator_loss examples") {
  CHECK(discriminator_loss(filled({2, 1, 7, 7}, 0.0f), filled({2, 1, 7, 7}, 0.0f)).item() ==
        doctest::Approx(2 * std::log(2.0)));
  CHECK(discriminator_loss(filled({2, 1, 7, 7}, 40.0f), filled({2, 1, 7, 7}, -40.0f)).item() == doctest::Approx(0.0).epsilon(1e-6));
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor r = random_tensor({3, 1, 7, 7}, rng, 4.0f), f = random_tensor({3, 1, 7, 7}, rng, 4.0f);
    CHECK(std::fabs(discriminator_loss(r, f).item() - reference_d_loss(r, f)) < 1e-5);
  }
}

TEST_CASE("cross-entropy clamp bounds each term") {
  const double cap = -std::log(kProbabilityClamp);
  CHECK(bce_with_logits(filled({4}, -100.0f), true).item() == doctest::Approx(cap).epsilon(1e-5));
  CHECK(bce_with_logits(filled({4}, 100.0f), false).item() == doctest::Approx(cap).epsilon(1e-5));
  CHECK(bce_with_logits(filled({4}, 100.0f), true).item() >= 0.0f);
  Rng rng(12);
  const Tensor l = random_tensor({64}, rng, 30.0f);
  for (bool target : {true, false}) {
    double ref = 0;
    for (real v : l.data()) ref -= clamped_log(target ? sigmoid_d(v) : 1.0 - sigmoid_d(v));
    CHECK(bce_with_logits(l, target).item() == doctest::Approx(ref / 64).epsilon(1e-5));
  }
  // Saturated logits contribute no gradient.
  Tensor sat(Shape{2}, {-100.0f, 0.0f});
  sat.set_requires_grad(true);
  {
    Tape tape;
    backward(bce_with_logits(sat, true), tape);
  }
  CHECK(sat.grad()[0] == 0.0f);
  CHECK(sat.grad()[1] == doctest::Approx(-0.25));
}

TEST_CASE("yolo_task_loss examples") {
  Annotation a;
  a.cx = 0.3f;
  a.cy = 0.6f;
  a.w = 0.1f;
  a.h = 0.05f;
  Tensor perfect(Shape{1, 4, 4, kCellValues}, 0.0f);
  auto v = perfect.mutable_data();
  const std::size_t o = ((2 * 4) + 1) * kCellValues;  // row 2, col 1
  v[o] = 1.0f;
  v[o + 1] = 0.3f * 4 - 1;
  v[o + 2] = 0.6f * 4 - 2;
  v[o + 3] = 0.1f;
  v[o + 4] = 0.05f;
  CHECK(yolo_task_loss(perfect, std::vector<Labels>{{a}}).item() == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(yolo_task_loss(Tensor(Shape{2, 4, 4, kCellValues}, 0.0f), std::vector<Labels>(2)).item() == 0.0f);
  // Empty scene, uniform confidence 0.4: 16 cells * 0.5 * 0.16.
  Tensor flat(Shape{1, 4, 4, kCellValues}, 0.4f);
  CHECK(yolo_task_loss(flat, std::vector<Labels>(1)).item() == doctest::Approx(1.28));
  a.cx = 1.2f;
  CHECK_THROWS_AS(yolo_task_loss(perfect, std::vector<Labels>{{a}}), std::invalid_argument);
  CHECK_THROWS_AS(yolo_task_loss(perfect, std::vector<Labels>(2)), std::invalid_argument);
}

TEST_CASE("yolo_task_loss agrees with the cell-by-cell reference") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.uniform_int(1, 4), s = rng.uniform_int(2, 8);
    const Tensor pred = random_pred(n, s, rng);
    const auto labels = random_labels(n, 5, rng);
    CHECK(yolo_task_loss(pred, labels).item() == doctest::Approx(reference_yolo(pred, labels, 5.0, 0.5)).epsilon(1e-5));
  }
}

TEST_CASE("encode_targets drops extra objects in an occupied cell") {
  Annotation a;
  a.cx = 0.1f;
  a.cy = 0.1f;
  a.w = a.h = 0.05f;
  Annotation b = a;
  b.cx = 0.15f;
  Annotation far = a;
  far.cx = far.cy = 0.9f;
  const GridTargets t = encode_targets({{a, b, far}, {a}}, 4);
  CHECK(t.dropped == 1);
  REQUIRE(t.cells.size() == 3);
  CHECK(t.cells[0].tx == doctest::Approx(0.4));
  CHECK(t.cells[1].row == 3);
  CHECK(t.cells[2].image == 1);
  // Centers on the far edge land in the last cell.
  Annotation edge = a;
  edge.cx = edge.cy = 1.0f;
  const GridTargets e = encode_targets({{edge}}, 4);
  CHECK(e.cells.at(0).col == 3);
  CHECK(e.cells.at(0).tx == doctest::Approx(1.0));
}

TEST_CASE("frozen confidence targets equal the default ones") {
  Rng rng(9);
  const Tensor pred = random_pred(2, 4, rng);
  const GridTargets targets = encode_targets(random_labels(2, 4, rng), 4);
  const std::vector<real> frozen = confidence_targets(pred, targets);
  CHECK(yolo_task_loss(pred, targets, {}, frozen).item() == yolo_task_loss(pred, targets).item());
  CHECK_THROWS_AS(yolo_task_loss(pred, targets, {}, std::vector<real>(frozen.size() + 1)), std::invalid_argument);
}

TEST_CASE("task_loss and total_loss arithmetic") {
  LossWeights w;
  w.beta = 0.5f;
  CHECK(task_loss(filled({1}, 0.0f), filled({1}, 0.0f), w).item() == 0.0f);
  CHECK(task_loss(filled({1}, 1.0f), filled({1}, 2.0f), w).item() == doctest::Approx(2.0));
  CHECK(task_loss(Tensor{}, filled({1}, 2.0f), w).item() == doctest::Approx(1.0));
  CHECK(total_loss(1, 1, 1, LossWeights{}) == 3.0);
  w.lambda = 0.1f;
  w.gamma = 0.01f;
  CHECK(total_loss(0.5, 1.4, 2.0, w) == doctest::Approx(0.66));
  w.gamma = 0.0f;
  CHECK(total_loss(0.5, 1.4, 123.0, w) == doctest::Approx(0.5 + 0.1 * 1.4));
}

TEST_CASE("task_loss with and without real labels") {
  Rng rng(30);
  const Tensor pred_real = random_pred(2, 8, rng), pred_fake = random_pred(2, 8, rng);
  const auto y = random_labels(2, 3, rng), y_c = random_labels(2, 3, rng);
  LossWeights w;
  w.beta = 0.25f;
  const double f_real = yolo_task_loss(pred_real, y).item(), f_fake = yolo_task_loss(pred_fake, y_c).item();
  CHECK(task_loss(pred_real, y, pred_fake, y_c, w).item() == doctest::Approx(f_real + 0.25 * f_fake));
  CHECK(task_loss(pred_real, std::nullopt, pred_fake, y_c, w).item() == doctest::Approx(0.25 * f_fake));
}

TEST_CASE("losses are non-negative and finite on extreme inputs") {
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor l = random_tensor({1, 1, 7, 7}, rng, 500.0f), m = random_tensor({1, 1, 7, 7}, rng, 500.0f);
    const Tensor x = uniform_tensor({1, 1, 8, 8}, rng, 0, 1), x_hat = uniform_tensor({1, 1, 8, 8}, rng, 0, 1);
    const real g = generator_loss(l, x_hat, x, LossWeights{}).item(), d = discriminator_loss(l, m).item();
    CHECK(std::isfinite(g));
    CHECK(std::isfinite(d));
    CHECK(g >= 0.0f);
    CHECK(d >= 0.0f);
    CHECK(yolo_task_loss(random_pred(1, 8, rng), random_labels(1, 4, rng)).item() >= 0.0f);
  }
}

TEST_CASE("weight validation") {
  LossWeights w;
  CHECK_NOTHROW(w.validate());
  w.beta = -1.0f;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  NoiseFieldSpec n;
  CHECK_NOTHROW(n.validate());
  n.sigma_w = -0.1f;
  CHECK_THROWS_AS(n.validate(), std::invalid_argument);
}
