#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "satgan/networks.hpp"
#include "satgan/scene.hpp"
#include "satgan/training.hpp"

namespace satgan {

/// Miniature sim-to-real study: one target sensor, three detector training
/// sets built from the same contexts (sensor-noised, noiseless, generator-
/// noised) and a held-out sensor-noised validation split.
struct Sim2RealSetup {
  SceneSpec scene;
  SensorNoiseModel sensor;
  int train_count = 2000;
  int validation_count = 512;
  TrainConfig gan;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TaskConfig task;
  TrainConfig detector;
  int noise_samples = 100;
  int flat_frames = 100;
};

/// The configuration the acceptance run uses.
Sim2RealSetup default_sim2real_setup();

struct NoiseStats {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Additive noise of the sensor on uniform frames at `level`.
NoiseStats flat_frame_noise(const SensorNoiseModel& sensor, real level, int height, int width, int frames,
                            std::uint64_t seed);
/// Pixel statistics of G(z) over the first `samples` contexts.
NoiseStats generated_noise(const Generator& generator, const Dataset& contexts, const NoiseFieldSpec& noise,
                           int samples, std::uint64_t seed);

struct Sim2RealResult {
  std::uint64_t seed = 0;
  double f1_target = 0.0;
  double f1_noiseless = 0.0;
  double f1_satgan = 0.0;
  NoiseStats generated;
  NoiseStats flat;
  std::vector<EpochReport> gan_epochs;
  double seconds = 0.0;
};

Sim2RealResult run_sim2real(const Sim2RealSetup& setup, std::uint64_t seed, std::ostream* log = nullptr);

}  // namespace satgan
