#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "sesn/tensor.hpp"

namespace sesn {

class Node;
using Var = std::shared_ptr<Node>;

/// A value in the computation graph. Leaves are constants or parameters;
/// interior nodes remember their inputs and how to push gradients to them.
class Node {
 public:
  using BackwardFn = std::function<void(Node&)>;

  Node(Tensor value, bool requires_grad) : value(std::move(value)), requires_grad(requires_grad) {}

  Tensor value;
  Tensor grad;  // allocated lazily, same shape as value
  bool requires_grad;
  std::vector<Var> inputs;
  BackwardFn backward_fn;

  const Shape& shape() const { return value.shape(); }

  /// Allocates a zero gradient if none exists yet and returns it.
  Tensor& ensure_grad();
  void zero_grad();
};

Var constant(Tensor value);
Var parameter(Tensor value);

/// Builds an interior node. The backward function is kept only when at
/// least one input requires a gradient.
Var make_node(Tensor value, std::vector<Var> inputs, Node::BackwardFn backward);

/// Reverse sweep from `root`, which must hold a single element. Gradients
/// accumulate into every reachable node that requires one.
void backward(const Var& root);

/// Reverse sweep seeded with an explicit upstream gradient.
void backward(const Var& root, const Tensor& seed);

}  // namespace sesn
