#pragma once

#include <vector>

#include "satgan/networks.hpp"
#include "satgan/random.hpp"
#include "satgan/scene.hpp"

namespace satgan::testing {

inline Tensor uniform_tensor(Shape shape, Rng& rng, real lo, real hi) {
  Tensor t(std::move(shape));
  for (real& v : t.mutable_data()) v = rng.uniform(lo, hi);
  return t;
}

/// Activated task-network output with plausible box sizes.
inline Tensor random_pred(int n, int s, Rng& rng) {
  Tensor p(Shape{n, s, s, kCellValues});
  auto v = p.mutable_data();
  for (std::size_t i = 0; i < v.size(); i += kCellValues) {
    v[i] = rng.uniform(0.0f, 1.0f);
    v[i + 1] = rng.uniform(0.0f, 1.0f);
    v[i + 2] = rng.uniform(0.0f, 1.0f);
    v[i + 3] = rng.uniform(0.03f, 0.3f);
    v[i + 4] = rng.uniform(0.03f, 0.3f);
  }
  return p;
}

inline std::vector<Labels> random_labels(int n, int max_objects, Rng& rng) {
  std::vector<Labels> out(static_cast<std::size_t>(n));
  for (Labels& l : out) {
    const int k = rng.uniform_int(0, max_objects);
    for (int i = 0; i < k; ++i) {
      Annotation a;
      a.cx = rng.uniform(0.05f, 0.95f);
      a.cy = rng.uniform(0.05f, 0.95f);
      a.w = rng.uniform(0.04f, 0.2f);
      a.h = rng.uniform(0.04f, 0.2f);
      l.push_back(a);
    }
  }
  return out;
}

}  // namespace satgan::testing
