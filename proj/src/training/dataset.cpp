#include <algorithm>
#include <stdexcept>

#include "satgan/ops.hpp"
#include "satgan/training.hpp"

namespace satgan {

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::satgan:
      return "satgan";
    case TrainMode::pix2pix:
      return "pix2pix";
    case TrainMode::detector:
      return "detector";
  }
  return "unknown";
}

TrainMode parse_train_mode(const std::string& name) {
  if (name == "satgan") return TrainMode::satgan;
  if (name == "pix2pix") return TrainMode::pix2pix;
  if (name == "detector") return TrainMode::detector;
  throw std::invalid_argument("unknown training mode '" + name + "' (expected satgan, pix2pix or detector)");
}

void Dataset::validate() const {
  if (labeled && labels.size() != images.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(images.size()) + " images but " +
                                std::to_string(labels.size()) + " label sets");
  }
  for (const Tensor& t : images) {
    if (t.rank() != 3 || t.dim(0) != 1) throw std::invalid_argument("dataset images must be [1,H,W], got " + shape_string(t.shape()));
    if (t.shape() != images.front().shape()) throw std::invalid_argument("dataset images differ in shape");
  }
}

void require_training_split(const Dataset& data, const std::string& what) {
  if (data.split != Split::train) throw std::invalid_argument(what + ": validation data may not be used for updates");
  if (data.images.empty()) throw std::invalid_argument(what + ": empty dataset");
  data.validate();
}

Dataset simulate_dataset(const SceneSpec& spec, int count, std::uint64_t seed, Split split) {
  if (count < 0) throw std::invalid_argument("simulate_dataset: negative count");
  spec.validate();
  Dataset d;
  d.split = split;
  for (int i = 0; i < count; ++i) {
    Scene s = render_scene(spec, mix_seed(seed, static_cast<std::uint64_t>(i)));
    d.images.push_back(std::move(s.image));
    d.labels.push_back(std::move(s.annotations));
  }
  return d;
}

Dataset degrade_dataset(const Dataset& clean, const SensorNoiseModel& model, std::uint64_t seed) {
  model.validate();
  Dataset d = clean;
  for (std::size_t i = 0; i < d.images.size(); ++i) {
    d.images[i] = apply_sensor_noise(clean.images[i], model, mix_seed(seed, static_cast<std::uint64_t>(i)));
  }
  return d;
}

Tensor stack_images(const Dataset& data, const std::vector<int>& indices) {
  if (indices.empty()) throw std::invalid_argument("stack_images: empty batch");
  const Shape& s = data.images.at(static_cast<std::size_t>(indices.front())).shape();
  const std::size_t plane = shape_numel(s);
  std::vector<real> values;
  values.reserve(plane * indices.size());
  for (int i : indices) {
    const Tensor& t = data.images.at(static_cast<std::size_t>(i));
    if (t.shape() != s) throw std::invalid_argument("stack_images: images differ in shape");
    values.insert(values.end(), t.data().begin(), t.data().end());
  }
  return Tensor(Shape{static_cast<int>(indices.size()), s[0], s[1], s[2]}, std::move(values));
}

std::vector<Labels> gather_labels(const Dataset& data, const std::vector<int>& indices) {
  if (!data.labeled) throw std::invalid_argument("gather_labels: dataset is unlabeled");
  std::vector<Labels> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(data.labels.at(static_cast<std::size_t>(i)));
  return out;
}

Dataset generate_dataset(const Generator& generator, const Dataset& contexts, TrainMode mode,
                         const NoiseFieldSpec& noise, std::uint64_t seed, int batch_size) {
  if (mode == TrainMode::detector) throw std::invalid_argument("generate_dataset: mode must be satgan or pix2pix");
  if (batch_size < 1) throw std::invalid_argument("generate_dataset: batch_size must be >= 1");
  contexts.validate();
  noise.validate();
  NoGradScope no_grad;
  Dataset out;
  out.split = contexts.split;
  out.labeled = contexts.labeled;
  out.labels = contexts.labels;
  const int n = static_cast<int>(contexts.size());
  for (int start = 0; start < n; start += batch_size) {
    std::vector<int> idx;
    for (int i = start; i < std::min(n, start + batch_size); ++i) idx.push_back(i);
    const Tensor c = stack_images(contexts, idx);
    // One stream per image keeps the output independent of batch_size.
    Tensor z(c.shape());
    const std::size_t plane = c.numel() / idx.size();
    auto zv = z.mutable_data();
    for (std::size_t b = 0; b < idx.size(); ++b) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(idx[b])));
      for (std::size_t p = 0; p < plane; ++p) {
        zv[b * plane + p] = mode == TrainMode::satgan ? rng.normal(noise.mu_z, noise.sigma_z)
                                                      : c.data()[b * plane + p] + rng.normal(noise.mu_w, noise.sigma_w);
      }
    }
    const Tensor fake = compose_fake(c, generator.forward(z));
    const auto fv = fake.data();
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const Shape& s = contexts.images[static_cast<std::size_t>(idx[b])].shape();
      out.images.emplace_back(s, std::vector<real>(fv.begin() + static_cast<std::ptrdiff_t>(b * plane),
                                                   fv.begin() + static_cast<std::ptrdiff_t>((b + 1) * plane)));
    }
  }
  return out;
}

}  // namespace satgan
