#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "satgan/boxes.hpp"
#include "satgan/tensor.hpp"

namespace satgan {

/// Ordered, named collection of parameter handles.
class ParameterStore {
 public:
  Tensor add(std::string name, Shape shape, real fill = 0.0f);
  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::size_t size() const noexcept { return tensors_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }

  void set_requires_grad(bool on);
  void zero_grad();
  /// Deep copy with fresh storage and no gradients.
  ParameterStore clone() const;
  /// Copies values from `other`, which must have identical names and shapes.
  void copy_from(const ParameterStore& other);

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

/// Fills `t` from N(0, stddev) on a stream keyed by (seed, name), so a
/// parameter's initial value does not depend on which other parameters exist.
void init_normal(Tensor& t, std::uint64_t seed, std::string_view name, real stddev = 0.02f);

class Model {
 public:
  virtual ~Model() = default;
  virtual std::string kind() const = 0;
  /// JSON echo of the configuration, stored in checkpoints.
  virtual std::string config_json() const = 0;

  ParameterStore& parameters() noexcept { return params_; }
  const ParameterStore& parameters() const noexcept { return params_; }

 protected:
  ParameterStore params_;
};

/// Disables gradients on a set of models for the lifetime of the guard.
class FreezeGuard {
 public:
  explicit FreezeGuard(std::vector<Model*> models);
  ~FreezeGuard();
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<Model*> models_;
};

struct SelfAttentionParams {
  Tensor query_kernel;  // [C/r, C, 1, 1]
  Tensor query_bias;    // [C/r]
  Tensor key_kernel;    // [C/r, C, 1, 1]; a key bias cancels in the softmax
  Tensor value_kernel;  // [C, C, 1, 1]
  Tensor value_bias;    // [C]
  Tensor gamma;         // [1], starts at 0
};

/// out = x + gamma * (V A^T), A = softmax over positions of Q^T K.
/// When `weights` is given it receives A as [N, HW, HW].
Tensor attention_forward(const Tensor& x, const SelfAttentionParams& p, Tensor* weights = nullptr);

struct GeneratorConfig {
  int in_channels = 1;
  int base_channels = 32;
  int max_channels = 256;
  int depth = 4;
  bool attention = true;
  int attention_after_layer = 3;
  int attention_reduction = 8;
  int kernel_size = 4;
  int stride = 2;
  /// Output is output_scale * tanh(.), i.e. noise in [-0.5, 0.5] by default.
  real output_scale = 0.5f;

  void validate() const;
  int encoder_channels(int layer) const;  // layer in [1, depth]
};

/// U-net noise generator with an optional self-attention block.
class Generator : public Model {
 public:
  explicit Generator(GeneratorConfig config, std::uint64_t seed = 0);

  Tensor forward(const Tensor& z) const;
  const GeneratorConfig& config() const noexcept { return config_; }
  SelfAttentionParams attention() const;

  std::string kind() const override { return "generator"; }
  std::string config_json() const override;

 private:
  GeneratorConfig config_;
};

struct DiscriminatorConfig {
  /// Conditional (pix2pix) mode takes the sample concatenated with its context.
  bool conditional = false;
  std::vector<int> layer_channels{32, 64, 128};
  int kernel_size = 4;
  real leaky_slope = 0.2f;

  int in_channels() const { return conditional ? 2 : 1; }
  void validate() const;
  /// Side length of the logit grid for a square input of side `input`.
  int output_size(int input) const;
};

/// PatchGAN discriminator emitting a grid of logits.
class Discriminator : public Model {
 public:
  explicit Discriminator(DiscriminatorConfig config, std::uint64_t seed = 0);

  Tensor forward(const Tensor& x, const Tensor& context = Tensor{}) const;
  const DiscriminatorConfig& config() const noexcept { return config_; }

  std::string kind() const override { return "discriminator"; }
  std::string config_json() const override;

 private:
  DiscriminatorConfig config_;
};

inline constexpr int kCellValues = 5;  // confidence, cx, cy, w, h

struct TaskConfig {
  int image_size = 64;
  int grid_size = 8;
  std::vector<int> channels{16, 32, 64, 64};
  /// w,h = box_prior * exp(box_log_range * tanh(raw)).
  real box_prior = 0.1125f;
  real box_log_range = 1.0f;
  real leaky_slope = 0.1f;
  /// Initial confidence of every cell, set through the head bias.
  real confidence_prior = 0.01f;

  void validate() const;
  int downsampling_blocks() const;
};

/// Single-class grid detector.
class TaskNetwork : public Model {
 public:
  explicit TaskNetwork(TaskConfig config, std::uint64_t seed = 0);

  /// [N,1,H,W] -> [N,S,S,5] of activated (confidence, cx, cy, w, h).
  Tensor forward(const Tensor& x) const;
  const TaskConfig& config() const noexcept { return config_; }

  std::string kind() const override { return "task"; }
  std::string config_json() const override;

 private:
  TaskConfig config_;
};

/// Cells with confidence >= threshold, as image-normalized boxes sorted by
/// descending confidence.
std::vector<std::vector<Detection>> decode_detections(const Tensor& pred, real confidence_threshold);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointHeader {
  std::string kind;
  std::string config_json;
};

/// Writes atomically via a temporary file in the same directory.
void save_checkpoint(const std::string& path, const Model& model);
/// Loads values into `model`; names, kind and shapes must match exactly.
void load_checkpoint(const std::string& path, Model& model);
CheckpointHeader read_checkpoint_header(const std::string& path);

GeneratorConfig generator_config_from_json(const std::string& json);
DiscriminatorConfig discriminator_config_from_json(const std::string& json);
TaskConfig task_config_from_json(const std::string& json);

}  // namespace satgan
