#pragma once

#include <stdexcept>
#include <string>

#include "satgan/networks.hpp"
#include "satgan/scene.hpp"
#include "satgan/training.hpp"

namespace satgan {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvaluationSettings {
  real iou_threshold = kDefaultIouThreshold;
  real magnitude_bin_width = 0.5f;
};

/// Everything a subcommand can be configured with. Seeds are not part of it;
/// they come from the command line and are recorded in seeds.json.
struct RunConfig {
  SceneSpec scene;
  SensorNoiseModel sensor;
  TrainConfig train;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TaskConfig task;
  EvaluationSettings evaluation;

  /// Cross-section consistency; throws ConfigError.
  void validate() const;
};

/// INI text with sections scene, sensor, train, weights, noise, yolo,
/// optimizer, generator, discriminator, task and evaluation. Every key is
/// optional; unknown sections or keys are rejected. discriminator.conditional
/// defaults to train.mode == pix2pix, task.image_size follows train.image_size.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Every key with its current value, in the layout parse_run_config reads.
std::string format_run_config(const RunConfig& config);

}  // namespace satgan
