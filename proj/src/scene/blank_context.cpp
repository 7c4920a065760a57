#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "satgan/scene.hpp"

namespace satgan {

Tensor make_blank_context(const Tensor& target_image, const Labels& annotations, real dataset_mean) {
  if (target_image.rank() < 2) throw std::invalid_argument("make_blank_context: image must have at least 2 dims");
  const int h = target_image.dim(-2), w = target_image.dim(-1);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t planes = target_image.numel() / plane;
  Tensor out(target_image.shape(), to_pixel_grid(dataset_mean));
  auto dst = out.mutable_data();
  const auto src = target_image.data();
  auto to_pixel = [](real v, int extent) {
    return std::clamp(static_cast<int>(std::lround(v * static_cast<real>(extent))), 0, extent);
  };
  for (const Annotation& a : annotations) {
    if (!a.is_object) continue;
    const int c0 = to_pixel(a.cx - 0.5f * a.w, w), c1 = to_pixel(a.cx + 0.5f * a.w, w);
    const int r0 = to_pixel(a.cy - 0.5f * a.h, h), r1 = to_pixel(a.cy + 0.5f * a.h, h);
    for (std::size_t p = 0; p < planes; ++p)
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
          const std::size_t i = p * plane + static_cast<std::size_t>(r) * w + c;
          dst[i] = src[i];
        }
  }
  return out;
}

real mean_intensity(const std::vector<Tensor>& images) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const Tensor& t : images) {
    for (real v : t.data()) acc += v;
    n += t.numel();
  }
  if (n == 0) throw std::invalid_argument("mean_intensity: no pixels");
  return to_pixel_grid(static_cast<real>(acc / static_cast<double>(n)));
}

}  // namespace satgan
