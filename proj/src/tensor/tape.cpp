#include <stdexcept>

#include "satgan/tensor.hpp"

namespace satgan {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() : previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() {
  if (g_active_tape == this) g_active_tape = previous_;
}

Tape* Tape::active() noexcept { return g_active_tape; }

void Tape::record(std::vector<Tensor> inputs, Tensor output, BackwardFn fn) {
  nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(fn)});
}

bool Tape::produced(const Tensor& t) const {
  for (const Node& n : nodes_) {
    if (n.output.is_same(t)) return true;
  }
  return false;
}

NoGradScope::NoGradScope() : saved_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = saved_; }

void backward(const Tensor& loss, Tape& tape) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got " +
                                (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
  }
  // Nodes are appended in execution order, so the loss is normally the last one.
  std::size_t end = tape.nodes_.size();
  while (end > 0 && !tape.nodes_[end - 1].output.is_same(loss)) --end;
  if (end == 0) throw std::invalid_argument("backward: loss was not produced on this tape");

  Tensor seed = loss;
  seed.grad_buffer()[0] += 1.0f;
  for (std::size_t i = end; i-- > 0;) {
    Tape::Node& node = tape.nodes_[i];
    if (!node.output.has_grad()) continue;
    node.fn(node.output.grad());
  }
}

}  // namespace satgan
