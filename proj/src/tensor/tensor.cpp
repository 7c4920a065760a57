#include "satgan/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace satgan {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 1) throw std::invalid_argument("tensor dimensions must be >= 1, got " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, real fill) : impl_(std::make_shared<Impl>()) {
  const std::size_t n = shape_numel(shape);
  impl_->shape = std::move(shape);
  impl_->data.assign(n, fill);
}

Tensor::Tensor(Shape shape, std::vector<real> values) : impl_(std::make_shared<Impl>()) {
  const std::size_t n = shape_numel(shape);
  if (values.size() != n) {
    throw std::invalid_argument("tensor data length " + std::to_string(values.size()) +
                                " does not match shape " + shape_string(shape));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
}

namespace {
void require_defined(const void* p) {
  if (!p) throw std::logic_error("operation on an undefined tensor");
}
}  // namespace

const Shape& Tensor::shape() const {
  require_defined(impl_.get());
  return impl_->shape;
}

int Tensor::dim(int axis) const {
  const int r = rank();
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) throw std::out_of_range("axis " + std::to_string(axis) + " out of range for " + shape_string(shape()));
  return impl_->shape[static_cast<std::size_t>(a)];
}

std::size_t Tensor::numel() const {
  require_defined(impl_.get());
  return impl_->data.size();
}

std::span<const real> Tensor::data() const {
  require_defined(impl_.get());
  return impl_->data;
}

std::span<real> Tensor::mutable_data() {
  require_defined(impl_.get());
  return impl_->data;
}

real Tensor::item() const {
  if (numel() != 1) throw std::logic_error("item() on tensor of shape " + shape_string(shape()));
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  require_defined(impl_.get());
  impl_->requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const real> Tensor::grad() const {
  if (!has_grad()) throw std::logic_error("tensor has no gradient");
  return impl_->grad;
}

std::span<real> Tensor::grad_buffer() const {
  require_defined(impl_.get());
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_) {
    impl_->grad.clear();
    impl_->grad.shrink_to_fit();
  }
}

Tensor Tensor::detach() const { return Tensor(shape(), impl_->data); }

Tensor Tensor::clone() const {
  Tensor t(shape(), impl_->data);
  t.impl_->requires_grad = impl_->requires_grad;
  t.impl_->grad = impl_->grad;
  return t;
}

namespace detail {

bool recording(std::initializer_list<const Tensor*> inputs) {
  if (Tape::active() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

Tensor make_result(Shape shape, std::vector<real> values, bool requires_grad) {
  Tensor t(std::move(shape), std::move(values));
  t.set_requires_grad(requires_grad);
  return t;
}

}  // namespace detail
}  // namespace satgan
