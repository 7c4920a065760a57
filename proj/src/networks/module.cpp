#include <algorithm>
#include <stdexcept>

#include "satgan/networks.hpp"
#include "satgan/random.hpp"

namespace satgan {

Tensor ParameterStore::add(std::string name, Shape shape, real fill) {
  if (contains(name)) throw std::logic_error("duplicate parameter name: " + name);
  Tensor t(std::move(shape), fill);
  t.set_requires_grad(true);
  names_.push_back(std::move(name));
  tensors_.push_back(t);
  return t;
}

const Tensor& ParameterStore::at(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("no parameter named " + std::string(name));
  return tensors_[static_cast<std::size_t>(it - names_.begin())];
}

bool ParameterStore::contains(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

void ParameterStore::set_requires_grad(bool on) {
  for (Tensor& t : tensors_) t.set_requires_grad(on);
}

void ParameterStore::zero_grad() {
  for (Tensor& t : tensors_) t.zero_grad();
}

ParameterStore ParameterStore::clone() const {
  ParameterStore out;
  out.names_ = names_;
  for (const Tensor& t : tensors_) {
    Tensor c = t.clone();
    c.set_requires_grad(t.requires_grad());
    out.tensors_.push_back(c);
  }
  return out;
}

void ParameterStore::copy_from(const ParameterStore& other) {
  if (other.names_ != names_) throw std::invalid_argument("copy_from: parameter names differ");
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (other.tensors_[i].shape() != tensors_[i].shape()) {
      throw std::invalid_argument("copy_from: shape mismatch for " + names_[i]);
    }
    const auto src = other.tensors_[i].data();
    std::copy(src.begin(), src.end(), tensors_[i].mutable_data().begin());
  }
}

void init_normal(Tensor& t, std::uint64_t seed, std::string_view name, real stddev) {
  Rng rng(mix_seed(seed, hash_name(name)));
  for (real& v : t.mutable_data()) v = rng.normal(0.0f, stddev);
}

FreezeGuard::FreezeGuard(std::vector<Model*> models) : models_(std::move(models)) {
  for (Model* m : models_) m->parameters().set_requires_grad(false);
}

FreezeGuard::~FreezeGuard() {
  for (Model* m : models_) m->parameters().set_requires_grad(true);
}

}  // namespace satgan
