#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "satgan/evaluation.hpp"
#include "satgan/losses.hpp"
#include "satgan/networks.hpp"
#include "satgan/optim.hpp"
#include "satgan/random.hpp"
#include "satgan/scene.hpp"

namespace satgan {

enum class Split { train, validation };
enum class TrainMode { satgan, pix2pix, detector };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

/// Images of one split, each [1,H,W], with optional per-image labels.
struct Dataset {
  Split split = Split::train;
  std::vector<Tensor> images;
  std::vector<Labels> labels;
  bool labeled = true;

  std::size_t size() const noexcept { return images.size(); }
  /// Throws std::invalid_argument on ragged shapes or a label count mismatch.
  void validate() const;
};

/// Throws std::invalid_argument unless `data` is a nonempty training split.
void require_training_split(const Dataset& data, const std::string& what);

/// Noiseless contexts; image i is render_scene(spec, mix_seed(seed, i)).
Dataset simulate_dataset(const SceneSpec& spec, int count, std::uint64_t seed, Split split);
/// Same images and labels with sensor noise drawn per image from (seed, i).
Dataset degrade_dataset(const Dataset& clean, const SensorNoiseModel& model, std::uint64_t seed);

/// [B,1,H,W] batch of the selected images.
Tensor stack_images(const Dataset& data, const std::vector<int>& indices);
std::vector<Labels> gather_labels(const Dataset& data, const std::vector<int>& indices);

struct TrainConfig {
  TrainMode mode = TrainMode::satgan;
  LossWeights weights;
  NoiseFieldSpec noise;
  YoloLossConfig yolo;
  int image_size = 64;
  int batch_size = 8;
  int steps_per_epoch = 100;
  int epochs = 10;
  AdamConfig generator_optimizer;
  AdamConfig discriminator_optimizer;
  AdamConfig task_optimizer{1e-3f, 0.9f, 0.999f, 1e-8f};
  std::uint64_t seed = 0;
  /// Checkpoint every this many epochs; 0 keeps only the final one.
  int checkpoint_interval = 0;
  int task_pretrain_steps = 500;
  real iou_threshold = kDefaultIouThreshold;

  void validate() const;
};

/// Means over an epoch plus validation metrics at the F1*-maximizing threshold.
struct EpochReport {
  int epoch = 0;
  double l_g = 0.0;
  double l_d = 0.0;
  double l_t = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1_star = 0.0;
  /// Not written to CSV, which must be reproducible.
  double wall_seconds = 0.0;
};

void write_epoch_csv(std::ostream& out, const std::vector<EpochReport>& reports);

using EpochCallback = std::function<void(const EpochReport&)>;

struct DetectorEvaluation {
  std::vector<PRPoint> curve;
  PRPoint best;
  DetectionSet detections;
};

/// Scores every grid cell of every image; `data` must be labeled.
DetectorEvaluation evaluate_detector(const TaskNetwork& task, const Dataset& data, real iou_threshold,
                                     int batch_size = 32);

struct GanBatch {
  Tensor context;  // [B,1,H,W]
  std::vector<Labels> context_labels;
  Tensor target;   // [B,1,H,W]
  /// Absent in unlabeled-target mode.
  std::optional<std::vector<Labels>> target_labels;
};

/// Generator-side objective of one step, recorded on the active tape.
struct GeneratorObjective {
  Tensor total;  // L_G + gamma * beta * f_T(T(x_hat), y_c)
  Tensor l_g;
  Tensor x_hat;
};

struct StepMetrics {
  double l_g = 0.0;  // adversarial + l1, without the task term
  double l_d = 0.0;
  double l_t = 0.0;
};

/// Owns the three networks and their optimizers and runs the alternating
/// updates. In pix2pix mode the generator input is c + w, the discriminator is
/// conditioned on c, the l1 target is the paired image and the task network is
/// left untouched.
class GanTrainer {
 public:
  GanTrainer(TrainConfig config, GeneratorConfig generator, DiscriminatorConfig discriminator, TaskConfig task);

  /// z ~ N(mu_z, sigma_z^2) (satgan) or w ~ N(mu_w, sigma_w^2) (pix2pix), shaped like `context`.
  Tensor sample_noise(const Tensor& context);
  Tensor generator_input(const Tensor& context, const Tensor& noise) const;
  /// clip(c + G(input)), without recording.
  Tensor fake(const Tensor& context, const Tensor& noise) const;

  /// `confidence_override` freezes the task term's confidence targets.
  GeneratorObjective generator_objective(const GanBatch& batch, const Tensor& noise,
                                         std::span<const real> confidence_override = {}) const;
  Tensor discriminator_objective(const GanBatch& batch, const Tensor& x_hat) const;

  StepMetrics step(const GanBatch& batch);
  StepMetrics step(const GanBatch& batch, const Tensor& noise);

  double discriminator_update(const GanBatch& batch, const Tensor& noise);
  /// Returns L_G; `fake_out` receives the detached x_hat used.
  double generator_update(const GanBatch& batch, const Tensor& noise, Tensor* fake_out = nullptr);
  double task_update(const GanBatch& batch, const Tensor& fake);
  /// Supervised step of T on labeled contexts only.
  double pretrain_task_step(const Tensor& context, const std::vector<Labels>& labels);

  const TrainConfig& config() const noexcept { return config_; }
  Generator& generator() noexcept { return generator_; }
  Discriminator& discriminator() noexcept { return discriminator_; }
  TaskNetwork& task() noexcept { return task_; }
  const Generator& generator() const noexcept { return generator_; }
  const Discriminator& discriminator() const noexcept { return discriminator_; }
  const TaskNetwork& task() const noexcept { return task_; }

 private:
  Tensor discriminate(const Tensor& image, const Tensor& context) const;

  TrainConfig config_;
  Generator generator_;
  Discriminator discriminator_;
  TaskNetwork task_;
  Adam generator_opt_;
  Adam discriminator_opt_;
  Adam task_opt_;
  Rng noise_rng_;
};

/// Draws batches for GAN training. SATGAN pairs independently drawn contexts
/// and targets; pix2pix draws targets and uses their blank contexts.
class GanBatchSampler {
 public:
  GanBatchSampler(const TrainConfig& config, const Dataset& contexts, const Dataset& targets);
  GanBatch next();
  real dataset_mean() const noexcept { return dataset_mean_; }

 private:
  TrainMode mode_;
  int batch_size_;
  const Dataset& contexts_;
  const Dataset& targets_;
  real dataset_mean_ = 0.0f;
  Rng rng_;
};

/// Runs task pretraining (satgan) and config.epochs epochs of alternating
/// updates; `validation` (labeled, validation split) scores T after each epoch.
std::vector<EpochReport> train_gan(GanTrainer& trainer, const Dataset& contexts, const Dataset& targets,
                                   const Dataset* validation, const EpochCallback& on_epoch = {});

/// Minimizes f_T alone on a labeled training split.
std::vector<EpochReport> train_detector(TaskNetwork& task, const TrainConfig& config, const Dataset& train,
                                        const Dataset* validation, const EpochCallback& on_epoch = {});

/// Fakes clip(c + G(z)) for every context; labels are copied from the contexts.
Dataset generate_dataset(const Generator& generator, const Dataset& contexts, TrainMode mode,
                         const NoiseFieldSpec& noise, std::uint64_t seed, int batch_size = 16);

/// Run directory: config.txt echo, seeds.json manifest, epochs.csv and checkpoints/.
class RunDirectory {
 public:
  explicit RunDirectory(std::string path);

  const std::string& path() const noexcept { return path_; }
  void write_config(const std::string& text) const;
  void write_seeds(const std::vector<std::pair<std::string, std::uint64_t>>& seeds) const;
  void write_epochs(const std::vector<EpochReport>& reports) const;
  /// checkpoints/<kind>_epoch<NNNN>.ckpt, or <kind>_final.ckpt for epoch < 0.
  std::string checkpoint_path(const std::string& kind, int epoch) const;

 private:
  std::string path_;
};

}  // namespace satgan
