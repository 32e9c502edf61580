#include "ldl/tensor.hpp"

#include "ldl/errors.hpp"

#include <unordered_set>

namespace ldl::numerics {

namespace {
thread_local bool tls_grad_enabled = true;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(tls_grad_enabled) { tls_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { tls_grad_enabled = previous_; }
bool grad_enabled() noexcept { return tls_grad_enabled; }

namespace detail {

void Node::accumulate(const Matrix& g) {
  if (!requires_grad) return;
  if (g.rows() != values.rows() || g.cols() != values.cols())
    throw DimensionError("gradient shape " + shape_string(g.rows(), g.cols()) +
                         " does not match value shape " + shape_string(values.rows(), values.cols()));
  if (has_grad) {
    grad += g;
  } else {
    grad = g;
    has_grad = true;
  }
}

}  // namespace detail

Tensor Tensor::constant(Matrix values) {
  auto n = std::make_shared<detail::Node>();
  n->values = std::move(values);
  return Tensor(std::move(n));
}

Tensor Tensor::parameter(Matrix values) {
  auto n = std::make_shared<detail::Node>();
  n->values = std::move(values);
  n->requires_grad = true;
  return Tensor(std::move(n));
}

Tensor Tensor::from_op(Matrix values, const std::vector<Tensor>& inputs, BackwardFn backward) {
  auto n = std::make_shared<detail::Node>();
  n->values = std::move(values);
  if (!tls_grad_enabled) return Tensor(std::move(n));
  for (const auto& in : inputs) {
    if (in.defined() && in.requires_grad()) {
      n->requires_grad = true;
      n->parents.push_back(in.node_);
    }
  }
  if (n->requires_grad) n->backward = std::move(backward);
  return Tensor(std::move(n));
}

detail::Node& Tensor::node() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return *node_;
}

Matrix& Tensor::mutable_values() {
  if (!is_leaf()) throw ContractError("only leaf tensors can be modified in place");
  return node().values;
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1)
    throw ContractError("item() requires a 1 x 1 tensor, got " + shape_string(rows(), cols()));
  return node().values(0, 0);
}

const Matrix& Tensor::grad() const {
  if (!node().has_grad) throw ContractError("tensor has no gradient");
  return node().grad;
}

void Tensor::zero_grad() {
  auto& n = node();
  n.has_grad = false;
  n.grad.resize(0, 0);
}

void backward(const Tensor& loss) {
  auto& root = loss.node();
  if (root.values.rows() != 1 || root.values.cols() != 1)
    throw ContractError("backward requires a scalar loss, got " +
                        shape_string(root.values.rows(), root.values.cols()));
  if (root.released) throw ContractError("backward already ran on this graph; rebuild the forward pass");
  if (!root.requires_grad) throw ContractError("loss is not connected to any tensor requiring grad");

  // Iterative post-order DFS gives a topological order (inputs before outputs).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{&root, 0}};
  visited.insert(&root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* p = node->parents[next++].get();
      if (p->released)
        throw ContractError("graph contains an already released subgraph");
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.accumulate(Matrix::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward && n->has_grad) n->backward(n->grad);
  }
  for (detail::Node* n : order) {
    if (n->backward) {
      n->backward = nullptr;
      n->parents.clear();
      n->released = true;
    }
  }
  root.released = true;
}

}  // namespace ldl::numerics
