#pragma once

#include <cstdint>
#include <vector>

#include "satgan/tensor.hpp"

namespace satgan {

struct AdamConfig {
  real lr = 2e-4f;
  real beta1 = 0.5f;
  real beta2 = 0.999f;
  real eps = 1e-8f;
};

struct AdamState {
  std::vector<std::vector<real>> first_moment;
  std::vector<std::vector<real>> second_moment;
  std::int64_t step = 0;
};

/// One bias-corrected adaptive-moment update. Every parameter must carry a
/// gradient; throws std::logic_error otherwise.
void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamConfig& config);

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);

  void step() { adam_step(params_, state_, config_); }
  void zero_grad();

  const AdamState& state() const noexcept { return state_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
  AdamConfig config_;
};

}  // namespace satgan
