#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "satgan/real.hpp"

namespace satgan {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array with optional gradient storage.
///
/// A Tensor is a handle: copies share the same storage, so a parameter held by
/// a model and the same parameter captured by a recorded operation are one
/// object. Use clone() for an independent copy and detach() to cut a value out
/// of the gradient graph.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, real fill = 0.0f);
  Tensor(Shape shape, std::vector<real> values);

  static Tensor scalar(real value) { return Tensor(Shape{1}, value); }

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  /// Size of `axis`; negative axes count from the back.
  int dim(int axis) const;
  std::size_t numel() const;

  std::span<const real> data() const;
  /// Writable view. Only initialisation code and optimisers write in place.
  std::span<real> mutable_data();
  real item() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);

  bool has_grad() const;
  std::span<const real> grad() const;
  /// Gradient buffer, zero-allocated on first use.
  std::span<real> grad_buffer() const;
  void zero_grad();

  Tensor detach() const;
  Tensor clone() const;
  bool is_same(const Tensor& other) const noexcept { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<real> data;
    std::vector<real> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

/// Records differentiable operations executed while it is alive.
///
/// Constructing a Tape makes it the active recorder for the current thread;
/// destroying it restores whichever tape was active before. Operations record
/// themselves only when at least one input requires a gradient.
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const real> grad_output)>;

  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() noexcept;

  void record(std::vector<Tensor> inputs, Tensor output, BackwardFn fn);
  std::size_t size() const noexcept { return nodes_.size(); }
  bool produced(const Tensor& t) const;

  friend void backward(const Tensor& loss, Tape& tape);

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn fn;
  };
  std::vector<Node> nodes_;
  Tape* previous_ = nullptr;
};

/// Suspends recording on the current thread for its lifetime.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* saved_;
};

/// Populates grad for every requires_grad tensor reachable from `loss`.
/// Gradients accumulate into existing buffers.
void backward(const Tensor& loss, Tape& tape);

namespace detail {
// True when an op with these inputs must be recorded.
bool recording(std::initializer_list<const Tensor*> inputs);
Tensor make_result(Shape shape, std::vector<real> values, bool requires_grad);
}  // namespace detail

}  // namespace satgan
