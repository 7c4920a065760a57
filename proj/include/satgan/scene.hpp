#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "satgan/boxes.hpp"
#include "satgan/tensor.hpp"

namespace satgan {

/// Pixel values are kept on a grid of one ulp at 1/2 (2^-24 in float). Sums of
/// on-grid values that stay in [0,1] are then exact, so x_hat - c reproduces
/// the added noise.
inline constexpr real kPixelQuantum = real(1) / real(1ULL << std::numeric_limits<real>::digits);
inline real to_pixel_grid(real v) { return std::nearbyint(v / kPixelQuantum) * kPixelQuantum; }

/// Procedural description of a noiseless point-source scene.
struct SceneSpec {
  int height = 64;
  int width = 64;
  int object_count_min = 1;
  int object_count_max = 3;
  // Visual magnitudes; the bright end is numerically smaller.
  real object_magnitude_bright = 9.0f;
  real object_magnitude_dim = 12.5f;
  real reference_magnitude = 9.0f;
  /// Peak amplitude of a source at reference_magnitude, in image units.
  real reference_magnitude_flux = 0.6f;
  real psf_sigma = 1.2f;
  int star_count_min = 0;
  int star_count_max = 0;
  real star_magnitude_bright = 10.0f;
  real star_magnitude_dim = 13.0f;
  real background_level = 0.05f;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
  /// Peak amplitude of a source of magnitude `m_v`.
  real peak_amplitude(real m_v) const;
};

struct Annotation {
  real cx = 0.0f;
  real cy = 0.0f;
  real w = 0.0f;
  real h = 0.0f;
  real magnitude = 0.0f;
  bool is_object = true;

  Box box() const { return {cx, cy, w, h}; }
};

using Labels = std::vector<Annotation>;

/// A point source placed at pixel coordinates (x right, y down; pixel (r,c)
/// has its center at (c + 0.5, r + 0.5)).
struct PointSource {
  real x = 0.0f;
  real y = 0.0f;
  real magnitude = 0.0f;
  bool is_object = true;
};

struct Scene {
  Tensor image;  // [1,H,W], values in [0,1]
  Labels annotations;
};

/// Brightness ratio for a magnitude difference: 100^(delta_m/5).
double magnitude_to_flux_ratio(double delta_m);

/// Renders the given sources; annotations are emitted for objects only.
Scene render_sources(const SceneSpec& spec, const std::vector<PointSource>& sources);

/// Draws object and star positions/magnitudes from (spec.seed, seed) and renders them.
Scene render_scene(const SceneSpec& spec, std::uint64_t seed);

/// Parametric stand-in for a target sensor.
struct SensorNoiseModel {
  /// Constant pedestal (sky/bias) added to every pixel.
  real bias_level = 0.0f;
  real read_noise_sigma = 0.0f;
  /// Signal-dependent noise has variance shot_noise_gain * signal.
  real shot_noise_gain = 0.0f;
  double hot_pixel_prob = 0.0;
  double dead_pixel_prob = 0.0;
  /// Per-frame structured field: 2-4 plane waves whose summed amplitude is
  /// structured_amplitude / sqrt(2) RMS.
  real structured_amplitude = 0.0f;
  /// Base wave period in pixels; values below 16 are raised to 16.
  real structured_period = 32.0f;
  std::uint64_t structured_phase_seed = 0;

  void validate() const;
};

/// Degrades every [H,W] plane of `image` (values in [0,1]).
Tensor apply_sensor_noise(const Tensor& image, const SensorNoiseModel& model, std::uint64_t seed);

/// Uniform `dataset_mean` frame with the pixel rectangles of the labeled
/// objects copied verbatim from `target_image`.
Tensor make_blank_context(const Tensor& target_image, const Labels& annotations, real dataset_mean);

/// Mean pixel value over a collection of images.
real mean_intensity(const std::vector<Tensor>& images);

}  // namespace satgan
