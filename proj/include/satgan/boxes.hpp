#pragma once

#include "satgan/real.hpp"

namespace satgan {

/// Center-format box in normalized image coordinates.
struct Box {
  real cx = 0.0f;
  real cy = 0.0f;
  real w = 0.0f;
  real h = 0.0f;

  real left() const { return cx - 0.5f * w; }
  real right() const { return cx + 0.5f * w; }
  real top() const { return cy - 0.5f * h; }
  real bottom() const { return cy + 0.5f * h; }
};

/// A scored box emitted by the task network.
struct Detection {
  Box box;
  real confidence = 0.0f;
};

/// Intersection over union of two boxes, in [0,1].
real iou(const Box& a, const Box& b);

}  // namespace satgan
