#include "satgan/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "satgan/random.hpp"

namespace satgan {

double magnitude_to_flux_ratio(double delta_m) { return std::pow(10.0, 0.4 * delta_m); }

void SceneSpec::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid scene spec: " + what); };
  if (height < 1 || width < 1) fail("image dimensions must be positive");
  if (object_count_min < 0 || object_count_min > object_count_max) fail("object count range");
  if (star_count_min < 0 || star_count_min > star_count_max) fail("star count range");
  if (object_magnitude_bright > object_magnitude_dim) fail("object magnitude range (bright must be <= dim)");
  if (star_magnitude_bright > star_magnitude_dim) fail("star magnitude range (bright must be <= dim)");
  if (!(psf_sigma > 0.0f)) fail("psf_sigma must be > 0");
  if (background_level < 0.0f || background_level >= 1.0f) fail("background_level must lie in [0,1)");
  if (reference_magnitude_flux < 0.0f) fail("reference_magnitude_flux must be >= 0");
  real brightest = 0.0f;
  if (object_count_max > 0) brightest = std::max(brightest, peak_amplitude(object_magnitude_bright));
  if (star_count_max > 0) brightest = std::max(brightest, peak_amplitude(star_magnitude_bright));
  if (background_level + brightest > 1.0f + 1e-6f) fail("background plus brightest source exceeds 1");
}

real SceneSpec::peak_amplitude(real m_v) const {
  return static_cast<real>(reference_magnitude_flux * magnitude_to_flux_ratio(reference_magnitude - m_v));
}

Scene render_sources(const SceneSpec& spec, const std::vector<PointSource>& sources) {
  const int h = spec.height, w = spec.width;
  std::vector<double> acc(static_cast<std::size_t>(h) * w, spec.background_level);
  const double inv_two_var = 1.0 / (2.0 * spec.psf_sigma * spec.psf_sigma);
  Labels labels;
  for (const PointSource& s : sources) {
    const double amp = spec.peak_amplitude(s.magnitude);
    for (int r = 0; r < h; ++r) {
      const double dy = r + 0.5 - s.y;
      for (int c = 0; c < w; ++c) {
        const double dx = c + 0.5 - s.x;
        acc[static_cast<std::size_t>(r) * w + c] += amp * std::exp(-(dx * dx + dy * dy) * inv_two_var);
      }
    }
    if (!s.is_object) continue;
    const real half = 3.0f * spec.psf_sigma;
    const real x0 = std::max<real>(0, s.x - half), x1 = std::min(static_cast<real>(w), s.x + half);
    const real y0 = std::max<real>(0, s.y - half), y1 = std::min(static_cast<real>(h), s.y + half);
    Annotation a;
    a.cx = 0.5f * (x0 + x1) / static_cast<real>(w);
    a.cy = 0.5f * (y0 + y1) / static_cast<real>(h);
    a.w = (x1 - x0) / static_cast<real>(w);
    a.h = (y1 - y0) / static_cast<real>(h);
    a.magnitude = s.magnitude;
    a.is_object = true;
    labels.push_back(a);
  }
  Tensor image(Shape{1, h, w});
  auto out = image.mutable_data();
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = to_pixel_grid(static_cast<real>(std::clamp(acc[i], 0.0, 1.0)));
  return Scene{std::move(image), std::move(labels)};
}

Scene render_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(mix_seed(spec.seed, seed));
  // Centers stay one pixel inside the frame; boxes may still be clipped.
  const real margin = 1.0f;
  auto draw = [&](int count, real bright, real dim, bool is_object, std::vector<PointSource>& out) {
    for (int i = 0; i < count; ++i) {
      PointSource s;
      s.x = rng.uniform(margin, static_cast<real>(spec.width) - margin);
      s.y = rng.uniform(margin, static_cast<real>(spec.height) - margin);
      s.magnitude = rng.uniform(bright, dim);
      s.is_object = is_object;
      out.push_back(s);
    }
  };
  std::vector<PointSource> sources;
  const int stars = rng.uniform_int(spec.star_count_min, spec.star_count_max);
  const int objects = rng.uniform_int(spec.object_count_min, spec.object_count_max);
  draw(stars, spec.star_magnitude_bright, spec.star_magnitude_dim, false, sources);
  draw(objects, spec.object_magnitude_bright, spec.object_magnitude_dim, true, sources);
  return render_sources(spec, sources);
}

}  // namespace satgan
