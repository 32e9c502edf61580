#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <vector>

namespace ldl {

using Index = Eigen::Index;
/// Dense row-major float64 matrix used throughout the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace ldl

namespace ldl::numerics {

namespace detail {

struct Node {
  Matrix values;
  Matrix grad;
  bool has_grad = false;
  bool requires_grad = false;
  bool released = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const Matrix&)> backward;

  void accumulate(const Matrix& g);
};

}  // namespace detail

/// A dense 2-D value on the autodiff tape.
///
/// Tensors are cheap shared handles. Leaves are created with `constant` or
/// `parameter`; every differentiable operation in ops.hpp returns a new
/// tensor recording how to push gradients back to its inputs. The tape is
/// rebuilt on every forward pass and released by `backward`.
class Tensor {
 public:
  using BackwardFn = std::function<void(const Matrix& grad_out)>;

  Tensor() = default;

  static Tensor constant(Matrix values);
  static Tensor parameter(Matrix values);

  /// Result of an operation. `backward` receives dL/d(result).
  static Tensor from_op(Matrix values, const std::vector<Tensor>& inputs, BackwardFn backward);

  bool defined() const noexcept { return node_ != nullptr; }
  Index rows() const { return node().values.rows(); }
  Index cols() const { return node().values.cols(); }
  const Matrix& values() const { return node().values; }
  /// Writable storage of a leaf (optimizers, finite-difference probes).
  Matrix& mutable_values();
  double item() const;

  bool requires_grad() const { return node().requires_grad; }
  bool is_leaf() const { return node().parents.empty() && !node().backward; }
  bool has_grad() const { return node().has_grad; }
  const Matrix& grad() const;
  void zero_grad();
  /// Adds `g` into this tensor's gradient; no-op when it does not require grad.
  void accumulate_grad(const Matrix& g) const { node().accumulate(g); }

  detail::Node& node() const;
  bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;

  friend void backward(const Tensor& loss);
};

/// While alive, operations on this thread record no tape (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

/// Reverse-mode sweep from a 1x1 loss into every requires_grad ancestor.
/// The tape is released afterwards; a second call on the same graph throws.
void backward(const Tensor& loss);

}  // namespace ldl::numerics
