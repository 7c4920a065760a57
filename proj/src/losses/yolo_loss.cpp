#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "satgan/losses.hpp"
#include "satgan/networks.hpp"

namespace satgan {

GridTargets encode_targets(const std::vector<Labels>& labels, int grid_size) {
  if (grid_size < 1) throw std::invalid_argument("encode_targets: grid_size must be >= 1");
  GridTargets t;
  t.batch = static_cast<int>(labels.size());
  t.grid_size = grid_size;
  const real s = static_cast<real>(grid_size);
  std::vector<char> taken(static_cast<std::size_t>(t.batch) * grid_size * grid_size, 0);
  for (int b = 0; b < t.batch; ++b) {
    for (const Annotation& a : labels[static_cast<std::size_t>(b)]) {
      if (!(a.cx >= 0.0f && a.cx <= 1.0f && a.cy >= 0.0f && a.cy <= 1.0f && a.w > 0.0f && a.w <= 1.0f && a.h > 0.0f &&
            a.h <= 1.0f)) {
        throw std::invalid_argument("annotation outside the unit square");
      }
      const int col = std::min(grid_size - 1, static_cast<int>(a.cx * s));
      const int row = std::min(grid_size - 1, static_cast<int>(a.cy * s));
      char& slot = taken[(static_cast<std::size_t>(b) * grid_size + row) * grid_size + col];
      if (slot) {
        ++t.dropped;
        continue;
      }
      slot = 1;
      t.cells.push_back({b, row, col, a.cx * s - static_cast<real>(col), a.cy * s - static_cast<real>(row), a.w, a.h});
    }
  }
  return t;
}

namespace {

void check_pred(const Tensor& pred, const GridTargets& t) {
  if (pred.rank() != 4 || pred.dim(0) != t.batch || pred.dim(1) != t.grid_size || pred.dim(2) != t.grid_size ||
      pred.dim(3) != kCellValues) {
    throw std::invalid_argument("yolo_task_loss: prediction " + shape_string(pred.shape()) + " does not match " +
                                std::to_string(t.batch) + " images on a " + std::to_string(t.grid_size) + " grid");
  }
}

std::size_t cell_offset(const GridTargets& t, const CellTarget& c) {
  return ((static_cast<std::size_t>(c.image) * t.grid_size + c.row) * t.grid_size + c.col) * kCellValues;
}

}  // namespace

std::vector<real> confidence_targets(const Tensor& pred, const GridTargets& targets) {
  check_pred(pred, targets);
  const real s = static_cast<real>(targets.grid_size);
  const auto p = pred.data();
  std::vector<real> out;
  out.reserve(targets.cells.size());
  for (const CellTarget& c : targets.cells) {
    const real* v = p.data() + cell_offset(targets, c);
    const Box predicted{(static_cast<real>(c.col) + v[1]) / s, (static_cast<real>(c.row) + v[2]) / s, v[3], v[4]};
    const Box truth{(static_cast<real>(c.col) + c.tx) / s, (static_cast<real>(c.row) + c.ty) / s, c.tw, c.th};
    out.push_back(iou(predicted, truth));
  }
  return out;
}

Tensor yolo_task_loss(const Tensor& pred, const GridTargets& targets, const YoloLossConfig& config,
                      std::span<const real> confidence_override) {
  check_pred(pred, targets);
  if (!confidence_override.empty() && confidence_override.size() != targets.cells.size()) {
    throw std::invalid_argument("yolo_task_loss: one confidence target per object cell expected");
  }
  const std::vector<real> conf_target =
      confidence_override.empty() ? confidence_targets(pred, targets)
                                  : std::vector<real>(confidence_override.begin(), confidence_override.end());
  const auto p = pred.data();
  const std::size_t cells = p.size() / kCellValues;
  const double inv_batch = 1.0 / static_cast<double>(targets.batch);

  // Every cell starts as a no-object cell; responsible cells are corrected below.
  std::vector<real> grad(p.size(), 0.0f);
  double loss = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    const double c = p[i * kCellValues];
    loss += config.noobj_weight * c * c;
    grad[i * kCellValues] = static_cast<real>(2.0 * config.noobj_weight * c * inv_batch);
  }
  for (std::size_t k = 0; k < targets.cells.size(); ++k) {
    const CellTarget& t = targets.cells[k];
    const std::size_t o = cell_offset(targets, t);
    const double conf = p[o], px = p[o + 1], py = p[o + 2], pw = p[o + 3], ph = p[o + 4];
    const double sw = std::sqrt(pw), sh = std::sqrt(ph);
    const double dx = px - t.tx, dy = py - t.ty, dw = sw - std::sqrt(t.tw), dh = sh - std::sqrt(t.th);
    const double dc = conf - conf_target[k];
    loss -= config.noobj_weight * conf * conf;
    loss += config.coord_weight * (dx * dx + dy * dy + dw * dw + dh * dh) + dc * dc;
    grad[o] = static_cast<real>(2.0 * dc * inv_batch);
    grad[o + 1] = static_cast<real>(2.0 * config.coord_weight * dx * inv_batch);
    grad[o + 2] = static_cast<real>(2.0 * config.coord_weight * dy * inv_batch);
    grad[o + 3] = static_cast<real>(config.coord_weight * dw / sw * inv_batch);
    grad[o + 4] = static_cast<real>(config.coord_weight * dh / sh * inv_batch);
  }
  const bool rec = detail::recording({&pred});
  Tensor result = detail::make_result(Shape{1}, {static_cast<real>(loss * inv_batch)}, rec);
  if (rec) {
    Tape::active()->record({pred}, result, [pred, grad = std::move(grad)](std::span<const real> g) mutable {
      auto gp = pred.grad_buffer();
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[0] * grad[i];
    });
  }
  return result;
}

Tensor yolo_task_loss(const Tensor& pred, const std::vector<Labels>& labels, const YoloLossConfig& config) {
  if (pred.rank() != 4) throw std::invalid_argument("yolo_task_loss: expected [N,S,S,5], got " + shape_string(pred.shape()));
  return yolo_task_loss(pred, encode_targets(labels, pred.dim(1)), config);
}

}  // namespace satgan
