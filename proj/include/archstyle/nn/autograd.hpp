#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "archstyle/nn/tensor.hpp"

namespace archstyle::nn {

/// One vertex of the reverse-mode tape. `backward` reads `grad` and adds
/// into the grads of `inputs`; it must not capture its own node.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  /// Gradient buffer, zero-initialized on first use.
  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Tensor value);
  static Var parameter(Tensor value);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const noexcept { return static_cast<bool>(node_); }

  /// Accumulated gradient; empty when nothing flowed into this variable.
  const Tensor& grad() const { return node_->grad; }
  void zero_grad();

  /// Same value, cut from the tape.
  Var detach() const { return constant(node_->value); }

  const std::shared_ptr<Node>& node() const noexcept { return node_; }
  bool same_object(const Var& other) const noexcept { return node_ == other.node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Builds an op result. The backward closure is kept only when some input
/// requires a gradient and grad mode is on.
Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward);

/// Seeds d(loss)/d(loss) = 1 and runs the tape in reverse topological order.
void backward(const Var& scalar_loss);

/// While alive, ops record no tape (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

}  // namespace archstyle::nn
