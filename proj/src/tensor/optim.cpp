#include "satgan/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace satgan {

void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamConfig& config) {
  if (state.first_moment.empty()) {
    for (const Tensor& p : params) {
      state.first_moment.emplace_back(p.numel(), 0.0f);
      state.second_moment.emplace_back(p.numel(), 0.0f);
    }
  }
  if (state.first_moment.size() != params.size()) throw std::logic_error("adam_step: optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw std::logic_error("adam_step: parameter " + std::to_string(i) + " " + shape_string(params[i].shape()) +
                             " has no gradient");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const real c1 = static_cast<real>(1.0 - std::pow(static_cast<double>(config.beta1), t));
  const real c2 = static_cast<real>(1.0 - std::pow(static_cast<double>(config.beta2), t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].mutable_data();
    const auto g = params[i].grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = config.beta1 * m[j] + (1.0f - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0f - config.beta2) * g[j] * g[j];
      const real mhat = m[j] / c1;
      const real vhat = v[j] / c2;
      w[j] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config) : params_(std::move(params)), config_(config) {}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace satgan
