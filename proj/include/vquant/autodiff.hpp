#pragma once

#include "vquant/tensor.hpp"

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

namespace vquant {

template <typename Scalar>
struct Node {
  Tensor<Scalar> value;
  Tensor<Scalar> grad;  // allocated on first accumulation
  std::vector<std::shared_ptr<Node>> parents;
  // Receives the node itself so closures never need to capture their owner.
  std::function<void(Node&)> backward;
  bool requires_grad = false;

  Tensor<Scalar>& grad_ref() {
    if (grad.empty()) grad = Tensor<Scalar>(value.shape());
    return grad;
  }
};

/**
 * Handle to a node of a reverse-mode differentiation graph.
 *
 * Copies share the node. Graphs are built by the free functions in ops.hpp and
 * are acyclic by construction: a result only ever points at its inputs.
 */
template <typename Scalar>
class Var {
 public:
  using NodeT = Node<Scalar>;

  Var() = default;
  explicit Var(std::shared_ptr<NodeT> node) : node_(std::move(node)) {}

  static Var constant(Tensor<Scalar> value) {
    auto n = std::make_shared<NodeT>();
    n->value = std::move(value);
    return Var(std::move(n));
  }

  static Var parameter(Tensor<Scalar> value) {
    auto n = std::make_shared<NodeT>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(std::move(n));
  }

  const Tensor<Scalar>& value() const { return node_->value; }
  // Mutating a value is only meaningful for leaves (parameters, inputs).
  Tensor<Scalar>& mutable_value() { return node_->value; }
  const Tensor<Scalar>& grad() const { return node_->grad_ref(); }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() { node_->grad = Tensor<Scalar>(); }

  NodeT* get() const { return node_.get(); }
  const std::shared_ptr<NodeT>& node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<NodeT> node_;
};

namespace detail {

template <typename Scalar>
Var<Scalar> make_result(Tensor<Scalar> value, std::vector<std::shared_ptr<Node<Scalar>>> parents,
                        std::function<void(Node<Scalar>&)> backward) {
  auto n = std::make_shared<Node<Scalar>>();
  n->value = std::move(value);
  for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward = std::move(backward);
  }
  return Var<Scalar>(std::move(n));
}

}  // namespace detail

/// Accumulates d(root)/d(leaf) * seed into every reachable node requiring a gradient.
template <typename Scalar>
void backward(const Var<Scalar>& root, Scalar seed = Scalar(1)) {
  using NodeT = Node<Scalar>;
  if (!root.requires_grad()) return;

  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> seen;
  std::vector<std::pair<NodeT*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodeT* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior gradients are per call; only leaves accumulate across calls.
  for (NodeT* node : order)
    if (node->backward) node->grad = Tensor<Scalar>();
  root.get()->grad_ref().data().array() += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

}  // namespace vquant
