#include <stdexcept>

#include "json.hpp"
#include "satgan/networks.hpp"
#include "satgan/ops.hpp"

namespace satgan {

void DiscriminatorConfig::validate() const {
  if (layer_channels.empty()) throw std::invalid_argument("invalid discriminator config: no layers");
  for (int c : layer_channels)
    if (c < 1) throw std::invalid_argument("invalid discriminator config: channel counts must be >= 1");
  if (kernel_size < 2 || kernel_size % 2 != 0) throw std::invalid_argument("invalid discriminator config: kernel_size must be even");
  if (leaky_slope < 0.0f) throw std::invalid_argument("invalid discriminator config: leaky_slope must be >= 0");
}

int DiscriminatorConfig::output_size(int input) const {
  const int pad = kernel_size / 2 - 1;
  int s = input;
  for (std::size_t i = 0; i < layer_channels.size(); ++i) s = (s + 2 * pad - kernel_size) / 2 + 1;
  return s + 2 * pad - kernel_size + 1;
}

// Layers 1..L halve the resolution; the final stride-1 layer maps to one
// logit per patch. Every layer but the first and last is instance-normalized.
Discriminator::Discriminator(DiscriminatorConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  const int k = config_.kernel_size;
  const int layers = static_cast<int>(config_.layer_channels.size());
  int cin = config_.in_channels();
  for (int i = 0; i <= layers; ++i) {
    const std::string name = "layer" + std::to_string(i + 1);
    const int cout = i < layers ? config_.layer_channels[static_cast<std::size_t>(i)] : 1;
    Tensor kernel = params_.add(name + ".kernel", {cout, cin, k, k});
    init_normal(kernel, seed, name + ".kernel");
    if (i == 0 || i == layers) {
      params_.add(name + ".bias", {cout});
    } else {
      params_.add(name + ".norm_scale", {cout}, 1.0f);
      params_.add(name + ".norm_shift", {cout});
    }
    cin = cout;
  }
}

Tensor Discriminator::forward(const Tensor& x, const Tensor& context) const {
  if (config_.conditional && !context.defined()) throw std::invalid_argument("conditional discriminator requires a context");
  if (!config_.conditional && context.defined()) {
    throw std::invalid_argument("unconditional discriminator does not take a context");
  }
  if (x.rank() != 4 || x.dim(1) != 1) throw std::invalid_argument("discriminator: expected [N,1,H,W], got " + shape_string(x.shape()));
  Tensor h = config_.conditional ? concat({x, context}, 1) : x;
  const int layers = static_cast<int>(config_.layer_channels.size());
  const int k = config_.kernel_size, pad = k / 2 - 1;
  for (int i = 0; i <= layers; ++i) {
    const std::string name = "layer" + std::to_string(i + 1);
    h = conv2d(h, params_.at(name + ".kernel"), i < layers ? 2 : 1, pad);
    if (i == 0 || i == layers) {
      h = add_channel_bias(h, params_.at(name + ".bias"));
    } else {
      h = instance_norm(h, params_.at(name + ".norm_scale"), params_.at(name + ".norm_shift"));
    }
    if (i < layers) h = leaky_relu(h, config_.leaky_slope);
  }
  return h;
}

std::string Discriminator::config_json() const {
  return nlohmann::json{{"conditional", config_.conditional},
                        {"layer_channels", config_.layer_channels},
                        {"kernel_size", config_.kernel_size},
                        {"leaky_slope", config_.leaky_slope}}
      .dump();
}

DiscriminatorConfig discriminator_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  DiscriminatorConfig c;
  c.conditional = j.at("conditional");
  c.layer_channels = j.at("layer_channels").get<std::vector<int>>();
  c.kernel_size = j.at("kernel_size");
  c.leaky_slope = j.at("leaky_slope");
  return c;
}

}  // namespace satgan
