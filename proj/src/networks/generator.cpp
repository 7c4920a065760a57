#include "json.hpp"
#include <stdexcept>

#include "satgan/networks.hpp"
#include "satgan/ops.hpp"
#include "satgan/scene.hpp"

namespace satgan {

namespace {

constexpr real kEncoderSlope = 0.2f;

std::string layer(const char* prefix, int i) { return std::string(prefix) + std::to_string(i); }

}  // namespace

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid generator config: " + what); };
  if (in_channels < 1 || base_channels < 1 || max_channels < base_channels) fail("channel counts");
  if (depth < 1) fail("depth must be >= 1");
  if (stride < 1 || kernel_size < stride || (kernel_size - stride) % 2 != 0) {
    fail("kernel_size - stride must be a non-negative even number");
  }
  if (attention) {
    if (attention_after_layer < 1 || attention_after_layer > depth) fail("attention_after_layer must lie in [1, depth]");
    if (attention_reduction < 1 || encoder_channels(attention_after_layer) / attention_reduction < 1) {
      fail("attention_reduction leaves no query channels");
    }
  }
  if (!(output_scale > 0.0f)) fail("output_scale must be > 0");
}

int GeneratorConfig::encoder_channels(int layer_index) const {
  long c = base_channels;
  for (int i = 1; i < layer_index && c < max_channels; ++i) c *= 2;
  return static_cast<int>(std::min<long>(c, max_channels));
}

Generator::Generator(GeneratorConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  const int k = config_.kernel_size, d = config_.depth;
  auto kernel = [&](const std::string& name, Shape shape) {
    Tensor t = params_.add(name, std::move(shape));
    init_normal(t, seed, name);
  };
  for (int i = 1; i <= d; ++i) {
    const int cin = i == 1 ? config_.in_channels : config_.encoder_channels(i - 1);
    const int cout = config_.encoder_channels(i);
    kernel(layer("enc", i) + ".kernel", {cout, cin, k, k});
    if (i == 1 || i == d) {
      params_.add(layer("enc", i) + ".bias", {cout});
    } else {
      params_.add(layer("enc", i) + ".norm_scale", {cout}, 1.0f);
      params_.add(layer("enc", i) + ".norm_shift", {cout});
    }
    if (config_.attention && i == config_.attention_after_layer) {
      const int reduced = cout / config_.attention_reduction;
      kernel("attn.query_kernel", {reduced, cout, 1, 1});
      params_.add("attn.query_bias", {reduced});
      kernel("attn.key_kernel", {reduced, cout, 1, 1});
      kernel("attn.value_kernel", {cout, cout, 1, 1});
      params_.add("attn.value_bias", {cout});
      params_.add("attn.gamma", {1});
    }
  }
  for (int i = d; i >= 1; --i) {
    const int cin = i == d ? config_.encoder_channels(d) : 2 * config_.encoder_channels(i);
    const int cout = i == 1 ? config_.in_channels : config_.encoder_channels(i - 1);
    kernel(layer("dec", i) + ".kernel", {cin, cout, k, k});
    if (i == 1) {
      params_.add(layer("dec", i) + ".bias", {cout});
    } else {
      params_.add(layer("dec", i) + ".norm_scale", {cout}, 1.0f);
      params_.add(layer("dec", i) + ".norm_shift", {cout});
    }
  }
}

SelfAttentionParams Generator::attention() const {
  if (!config_.attention) throw std::logic_error("generator has no attention layer");
  return {params_.at("attn.query_kernel"), params_.at("attn.query_bias"), params_.at("attn.key_kernel"),
          params_.at("attn.value_kernel"), params_.at("attn.value_bias"), params_.at("attn.gamma")};
}

Tensor Generator::forward(const Tensor& z) const {
  const int d = config_.depth, s = config_.stride, pad = (config_.kernel_size - config_.stride) / 2;
  if (z.rank() != 4 || z.dim(1) != config_.in_channels) {
    throw std::invalid_argument("generator: expected [N," + std::to_string(config_.in_channels) + ",H,W], got " +
                                shape_string(z.shape()));
  }
  long factor = 1;
  for (int i = 0; i < d; ++i) factor *= s;
  if (z.dim(2) % factor != 0 || z.dim(3) % factor != 0) {
    throw std::invalid_argument("generator: spatial size " + shape_string(z.shape()) + " not divisible by " +
                                std::to_string(factor));
  }
  auto p = [&](const std::string& name) -> const Tensor& { return params_.at(name); };

  std::vector<Tensor> skips(static_cast<std::size_t>(d) + 1);
  Tensor h = z;
  for (int i = 1; i <= d; ++i) {
    const std::string name = layer("enc", i);
    h = conv2d(h, p(name + ".kernel"), s, pad);
    h = (i == 1 || i == d) ? add_channel_bias(h, p(name + ".bias"))
                           : instance_norm(h, p(name + ".norm_scale"), p(name + ".norm_shift"));
    h = leaky_relu(h, kEncoderSlope);
    if (config_.attention && i == config_.attention_after_layer) h = attention_forward(h, attention());
    skips[static_cast<std::size_t>(i)] = h;
  }
  for (int i = d; i >= 1; --i) {
    const std::string name = layer("dec", i);
    if (i != d) h = concat({h, skips[static_cast<std::size_t>(i)]}, 1);
    h = conv_transpose2d(h, p(name + ".kernel"), s, pad);
    if (i == 1) {
      h = add_channel_bias(h, p(name + ".bias"));
    } else {
      h = relu(instance_norm(h, p(name + ".norm_scale"), p(name + ".norm_shift")));
    }
  }
  return quantize(affine(tanh(h), config_.output_scale), kPixelQuantum);
}

std::string Generator::config_json() const {
  const GeneratorConfig& c = config_;
  return nlohmann::json{{"in_channels", c.in_channels},
                        {"base_channels", c.base_channels},
                        {"max_channels", c.max_channels},
                        {"depth", c.depth},
                        {"attention", c.attention},
                        {"attention_after_layer", c.attention_after_layer},
                        {"attention_reduction", c.attention_reduction},
                        {"kernel_size", c.kernel_size},
                        {"stride", c.stride},
                        {"output_scale", c.output_scale}}
      .dump();
}

GeneratorConfig generator_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  GeneratorConfig c;
  c.in_channels = j.at("in_channels");
  c.base_channels = j.at("base_channels");
  c.max_channels = j.at("max_channels");
  c.depth = j.at("depth");
  c.attention = j.at("attention");
  c.attention_after_layer = j.at("attention_after_layer");
  c.attention_reduction = j.at("attention_reduction");
  c.kernel_size = j.at("kernel_size");
  c.stride = j.at("stride");
  c.output_scale = j.at("output_scale");
  return c;
}

}  // namespace satgan
