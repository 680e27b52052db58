#include "sesn/autograd.hpp"

#include <unordered_set>

namespace sesn {

Tensor& Node::ensure_grad() {
  if (grad.empty()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

void Node::zero_grad() {
  if (!grad.empty()) grad.fill(0.0);
}

Var constant(Tensor value) { return std::make_shared<Node>(std::move(value), false); }

Var parameter(Tensor value) { return std::make_shared<Node>(std::move(value), true); }

Var make_node(Tensor value, std::vector<Var> inputs, Node::BackwardFn backward) {
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in->requires_grad;
  auto node = std::make_shared<Node>(std::move(value), needs);
  if (needs) {
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(backward);
  }
  return node;
}

namespace {

std::vector<Node*> topological_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  // Iterative post-order DFS; graphs for deep stacks overflow a recursive walk.
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

void backward(const Var& root, const Tensor& seed) {
  if (seed.shape() != root->value.shape())
    throw ShapeError("backward seed shape " + shape_to_string(seed.shape()) +
                     " does not match root " + shape_to_string(root->value.shape()));
  if (!root->requires_grad) return;
  Tensor& g = root->ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];

  auto order = topological_order(root.get());
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

void backward(const Var& root) {
  if (root->value.size() != 1) throw ShapeError("backward() without seed needs a scalar root");
  backward(root, Tensor(root->value.shape(), 1.0));
}

}  // namespace sesn
