#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "satgan/networks.hpp"
#include "satgan/ops.hpp"

namespace satgan {

void TaskConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid task config: " + what); };
  if (grid_size < 1 || image_size < grid_size || image_size % grid_size != 0) fail("image_size must be a multiple of grid_size");
  if (channels.empty()) fail("no backbone blocks");
  for (int c : channels)
    if (c < 1) fail("channel counts must be >= 1");
  const int ratio = image_size / grid_size;
  if ((ratio & (ratio - 1)) != 0) fail("image_size / grid_size must be a power of two");
  if (downsampling_blocks() > static_cast<int>(channels.size())) fail("too few backbone blocks to reach the grid size");
  if (!(box_prior > 0.0f) || box_log_range < 0.0f) fail("box prior must be > 0 and range >= 0");
  if (!(confidence_prior > 0.0f && confidence_prior < 1.0f)) fail("confidence_prior must lie in (0,1)");
}

int TaskConfig::downsampling_blocks() const {
  int n = 0;
  for (int r = image_size / grid_size; r > 1; r /= 2) ++n;
  return n;
}

TaskNetwork::TaskNetwork(TaskConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  int cin = 1;
  for (std::size_t i = 0; i < config_.channels.size(); ++i) {
    const std::string name = "block" + std::to_string(i + 1);
    Tensor kernel = params_.add(name + ".kernel", {config_.channels[i], cin, 3, 3});
    init_normal(kernel, seed, name + ".kernel", std::sqrt(2.0f / static_cast<real>(cin * 9)));
    params_.add(name + ".bias", {config_.channels[i]});
    cin = config_.channels[i];
  }
  Tensor head = params_.add("head.kernel", {kCellValues, cin, 1, 1});
  init_normal(head, seed, "head.kernel");
  Tensor head_bias = params_.add("head.bias", {kCellValues});
  head_bias.mutable_data()[0] = std::log(config_.confidence_prior / (1.0f - config_.confidence_prior));
}

Tensor TaskNetwork::forward(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != config_.image_size || x.dim(3) != config_.image_size) {
    throw std::invalid_argument("task network: expected [N,1," + std::to_string(config_.image_size) + "," +
                                std::to_string(config_.image_size) + "], got " + shape_string(x.shape()));
  }
  const int strided = config_.downsampling_blocks();
  Tensor h = x;
  for (std::size_t i = 0; i < config_.channels.size(); ++i) {
    const std::string name = "block" + std::to_string(i + 1);
    h = conv2d(h, params_.at(name + ".kernel"), static_cast<int>(i) < strided ? 2 : 1, 1);
    h = leaky_relu(add_channel_bias(h, params_.at(name + ".bias")), config_.leaky_slope);
  }
  h = add_channel_bias(conv2d(h, params_.at("head.kernel"), 1, 0), params_.at("head.bias"));
  h = permute(h, {0, 2, 3, 1});  // [N,S,S,5]
  const Tensor position = sigmoid(slice(h, 3, 0, 3));
  const Tensor size = affine(exp(affine(tanh(slice(h, 3, 3, 5)), config_.box_log_range)), config_.box_prior);
  return concat({position, size}, 3);
}

std::string TaskNetwork::config_json() const {
  return nlohmann::json{{"image_size", config_.image_size}, {"grid_size", config_.grid_size},
                        {"channels", config_.channels},     {"box_prior", config_.box_prior},
                        {"box_log_range", config_.box_log_range}, {"leaky_slope", config_.leaky_slope},
                        {"confidence_prior", config_.confidence_prior}}
      .dump();
}

TaskConfig task_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  TaskConfig c;
  c.image_size = j.at("image_size");
  c.grid_size = j.at("grid_size");
  c.channels = j.at("channels").get<std::vector<int>>();
  c.box_prior = j.at("box_prior");
  c.box_log_range = j.at("box_log_range");
  c.leaky_slope = j.at("leaky_slope");
  c.confidence_prior = j.at("confidence_prior");
  return c;
}

std::vector<std::vector<Detection>> decode_detections(const Tensor& pred, real confidence_threshold) {
  if (pred.rank() != 4 || pred.dim(3) != kCellValues || pred.dim(1) != pred.dim(2)) {
    throw std::invalid_argument("decode_detections: expected [N,S,S,5], got " + shape_string(pred.shape()));
  }
  if (!(confidence_threshold >= 0.0f && confidence_threshold <= 1.0f)) {
    throw std::invalid_argument("decode_detections: threshold must lie in [0,1]");
  }
  const int n = pred.dim(0), s = pred.dim(1);
  const auto v = pred.data();
  std::vector<std::vector<Detection>> out(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b) {
    for (int row = 0; row < s; ++row) {
      for (int col = 0; col < s; ++col) {
        const real* cell = v.data() + ((static_cast<std::size_t>(b) * s + row) * s + col) * kCellValues;
        if (cell[0] < confidence_threshold) continue;
        Detection d;
        d.confidence = cell[0];
        d.box = {(static_cast<real>(col) + cell[1]) / static_cast<real>(s),
                 (static_cast<real>(row) + cell[2]) / static_cast<real>(s), cell[3], cell[4]};
        out[static_cast<std::size_t>(b)].push_back(d);
      }
    }
    std::stable_sort(out[static_cast<std::size_t>(b)].begin(), out[static_cast<std::size_t>(b)].end(),
                     [](const Detection& a, const Detection& c) { return a.confidence > c.confidence; });
  }
  return out;
}

}  // namespace satgan
