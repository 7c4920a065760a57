#include <cmath>
#include <numbers>
#include <stdexcept>

#include "satgan/random.hpp"
#include "satgan/scene.hpp"

namespace satgan {

void SensorNoiseModel::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid sensor model: " + what); };
  if (hot_pixel_prob < 0.0 || hot_pixel_prob > 1.0) fail("hot_pixel_prob outside [0,1]");
  if (dead_pixel_prob < 0.0 || dead_pixel_prob > 1.0) fail("dead_pixel_prob outside [0,1]");
  if (hot_pixel_prob + dead_pixel_prob > 1.0) fail("hot + dead probability exceeds 1");
  if (read_noise_sigma < 0.0f || shot_noise_gain < 0.0f || structured_amplitude < 0.0f || bias_level < 0.0f) {
    fail("sigmas, gains and amplitudes must be >= 0");
  }
  if (!(structured_period > 0.0f)) fail("structured_period must be > 0");
}

namespace {

struct Wave {
  real kx, ky, amplitude;
};

// Orientation and period belong to the sensor; phase is drawn per frame.
std::vector<Wave> sensor_waves(const SensorNoiseModel& m) {
  Rng rng(mix_seed(m.structured_phase_seed, 0x57a7));
  const int count = rng.uniform_int(2, 4);
  const real base_period = std::max<real>(16, m.structured_period);
  std::vector<Wave> waves;
  for (int i = 0; i < count; ++i) {
    const real theta = rng.uniform(0.0f, std::numbers::pi_v<real>);
    const real period = base_period * rng.uniform(1.0f, 2.0f);
    const real k = 2.0f * std::numbers::pi_v<real> / period;
    waves.push_back({k * std::cos(theta), k * std::sin(theta), m.structured_amplitude / std::sqrt(static_cast<real>(count))});
  }
  return waves;
}

}  // namespace

Tensor apply_sensor_noise(const Tensor& image, const SensorNoiseModel& model, std::uint64_t seed) {
  model.validate();
  if (image.rank() < 2) throw std::invalid_argument("apply_sensor_noise: image must have at least 2 dims");
  const int h = image.dim(-2), w = image.dim(-1);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t planes = image.numel() / plane;

  Tensor out = image.detach();
  auto px = out.mutable_data();
  Rng rng(seed);
  const std::vector<Wave> waves = model.structured_amplitude > 0.0f ? sensor_waves(model) : std::vector<Wave>{};
  const bool replace = model.hot_pixel_prob > 0.0 || model.dead_pixel_prob > 0.0;

  for (std::size_t p = 0; p < planes; ++p) {
    real* v = px.data() + p * plane;
    std::vector<real> phases;
    for (std::size_t k = 0; k < waves.size(); ++k) phases.push_back(rng.uniform(0.0f, 2.0f * std::numbers::pi_v<real>));
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        real& x = v[static_cast<std::size_t>(r) * w + c];
        const real signal = x;
        real y = x;
        if (model.bias_level > 0.0f) y += model.bias_level;
        for (std::size_t k = 0; k < waves.size(); ++k) {
          y += waves[k].amplitude * std::sin(waves[k].kx * (c + 0.5f) + waves[k].ky * (r + 0.5f) + phases[k]);
        }
        if (model.read_noise_sigma > 0.0f) y += rng.normal(0.0f, model.read_noise_sigma);
        if (model.shot_noise_gain > 0.0f && signal > 0.0f) y += rng.normal(0.0f, std::sqrt(model.shot_noise_gain * signal));
        if (replace) {
          const real u = rng.uniform();
          if (u < model.hot_pixel_prob) {
            y = 1.0f;
          } else if (u < model.hot_pixel_prob + model.dead_pixel_prob) {
            y = 0.0f;
          }
        }
        x = to_pixel_grid(std::clamp<real>(y, 0, 1));
      }
    }
  }
  return out;
}

}  // namespace satgan
