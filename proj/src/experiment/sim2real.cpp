#include <chrono>
#include <cmath>

#include "satgan/experiment.hpp"
#include "satgan/csv.hpp"
#include "satgan/ops.hpp"

namespace satgan {
namespace {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  long count = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++count;
  }
  NoiseStats stats() const {
    const double mean = sum / static_cast<double>(count);
    return {mean, std::sqrt(std::max(0.0, sum_sq / static_cast<double>(count) - mean * mean))};
  }
};

}  // namespace

Sim2RealSetup default_sim2real_setup() {
  Sim2RealSetup s;
  s.sensor.bias_level = 0.04f;
  s.sensor.read_noise_sigma = 0.025f;
  s.sensor.shot_noise_gain = 0.002f;
  s.sensor.structured_amplitude = 0.02f;
  s.sensor.structured_period = 32.0f;
  s.sensor.structured_phase_seed = 7;
  s.sensor.hot_pixel_prob = 2e-4;
  s.sensor.dead_pixel_prob = 1e-4;

  s.gan.mode = TrainMode::satgan;
  s.gan.weights.alpha = 0.0f;
  s.gan.batch_size = 8;
  s.gan.steps_per_epoch = 300;
  s.gan.epochs = 10;
  s.gan.task_pretrain_steps = 500;

  s.generator.base_channels = 16;
  s.generator.max_channels = 128;

  s.detector.mode = TrainMode::detector;
  s.detector.batch_size = 16;
  s.detector.steps_per_epoch = 200;
  s.detector.epochs = 10;
  return s;
}

NoiseStats flat_frame_noise(const SensorNoiseModel& sensor, real level, int height, int width, int frames,
                            std::uint64_t seed) {
  const real flat = to_pixel_grid(level);
  const Tensor frame(Shape{1, height, width}, flat);
  Moments m;
  for (int f = 0; f < frames; ++f) {
    const Tensor noisy = apply_sensor_noise(frame, sensor, mix_seed(seed, static_cast<std::uint64_t>(f)));
    for (real v : noisy.data()) m.add(static_cast<double>(v) - static_cast<double>(flat));
  }
  return m.stats();
}

NoiseStats generated_noise(const Generator& generator, const Dataset& contexts, const NoiseFieldSpec& noise,
                           int samples, std::uint64_t seed) {
  NoGradScope no_grad;
  Moments m;
  const int n = std::min<int>(samples, static_cast<int>(contexts.size()));
  const Shape& s = contexts.images.front().shape();
  for (int i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const Tensor z = rng.normal_tensor(Shape{1, s[0], s[1], s[2]}, noise.mu_z, noise.sigma_z);
    for (real v : generator.forward(z).data()) m.add(static_cast<double>(v));
  }
  return m.stats();
}

Sim2RealResult run_sim2real(const Sim2RealSetup& setup, std::uint64_t seed, std::ostream* log) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  auto stream = [&](const char* name) { return mix_seed(seed, hash_name(name)); };

  Sim2RealResult result;
  result.seed = seed;
  const Dataset contexts = simulate_dataset(setup.scene, setup.train_count, stream("contexts"), Split::train);
  const Dataset target = degrade_dataset(contexts, setup.sensor, stream("target-noise"));
  const Dataset validation =
      degrade_dataset(simulate_dataset(setup.scene, setup.validation_count, stream("validation"), Split::validation),
                      setup.sensor, stream("validation-noise"));

  TrainConfig gan = setup.gan;
  gan.seed = stream("gan");
  GanTrainer trainer(gan, setup.generator, setup.discriminator, setup.task);
  result.gan_epochs = train_gan(trainer, contexts, target, &validation, [&](const EpochReport& r) {
    if (log) {
      *log << "  seed " << seed << " gan epoch " << r.epoch << ": L_G " << format_number(r.l_g) << " L_D "
           << format_number(r.l_d) << " L_T " << format_number(r.l_t) << " T f1* " << format_number(r.f1_star)
           << " (" << format_number(std::round(elapsed())) << " s)\n"
           << std::flush;
    }
  });
  result.generated = generated_noise(trainer.generator(), contexts, gan.noise, setup.noise_samples, stream("noise-samples"));
  result.flat = flat_frame_noise(setup.sensor, setup.scene.background_level, setup.scene.height, setup.scene.width,
                                 setup.flat_frames, stream("flat-frames"));

  Dataset augmented = generate_dataset(trainer.generator(), contexts, TrainMode::satgan, gan.noise, stream("augment"));
  augmented.split = Split::train;

  TrainConfig det = setup.detector;
  det.seed = stream("detector");
  auto score = [&](const Dataset& train, const char* name) {
    TaskNetwork task(setup.task, mix_seed(det.seed, hash_name("task")));
    train_detector(task, det, train, nullptr);
    const double f1 = f1_star(evaluate_detector(task, validation, det.iou_threshold).curve);
    if (log) *log << "  seed " << seed << " detector on " << name << ": F1* " << format_number(f1) << '\n' << std::flush;
    return f1;
  };
  result.f1_target = score(target, "target-domain");
  result.f1_noiseless = score(contexts, "noiseless");
  result.f1_satgan = score(augmented, "satgan-augmented");
  result.seconds = elapsed();
  return result;
}

}  // namespace satgan
