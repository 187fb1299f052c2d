#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uda {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node;

struct TensorImpl {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until a backward pass reaches it
  bool requires_grad = false;
  std::shared_ptr<Node> node;  // null for leaves
};

// Receives the gradient of the node's output and accumulates into inputs.
using BackwardFn = std::function<void(std::span<const double> grad_out)>;

struct Node {
  std::string_view op;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  BackwardFn backward;
};

}  // namespace detail

/// Dense row-major tensor of doubles with an optional gradient.
///
/// Tensor is a shared handle: copies alias the same storage. Values are
/// immutable once produced by an operation; only leaves may be updated in
/// place (the optimizer does this between steps). Operations whose inputs
/// require gradients record a node, so the graph is rebuilt on every forward
/// pass and discarded with the last handle that references it.
class Tensor {
 public:
  Tensor();

  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->values.size(); }
  // Extents of a rank-2 tensor; throw ShapeError on any other rank.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return impl_->values; }
  double item() const;
  double operator[](std::size_t i) const { return impl_->values[i]; }
  double at(std::size_t row, std::size_t col) const;

  // In-place access for leaves only (optimizer updates, gradcheck probes).
  std::span<double> mutable_values();

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on);
  bool is_leaf() const { return impl_->node == nullptr; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  void zero_grad();

  // Copy of the values with no graph attachment and no gradient.
  Tensor detach() const;

  // Reverse-mode sweep from this scalar; see Tape.
  void backward() const;

  bool same_as(const Tensor& other) const { return impl_ == other.impl_; }

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl);

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Topologically ordered record of the nodes reachable from a root tensor.
/// Every node's inputs precede it, and backward() visits each node once in
/// reverse order.
class Tape {
 public:
  static Tape record(const Tensor& root);

  std::size_t size() const { return order_.size(); }
  // Operation names in recording order (leaves are skipped).
  std::vector<std::string_view> ops() const;

  // Seeds d(root)/d(root) = 1 and accumulates into every leaf that requires
  // a gradient. Non-leaf gradients are reset at the start of the sweep.
  void backward();

 private:
  std::shared_ptr<detail::TensorImpl> root_;
  std::vector<std::shared_ptr<detail::TensorImpl>> order_;
};

namespace detail {

// Builds the result of a primitive: validates finiteness, and attaches a node
// when any input requires a gradient.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> values,
                   std::span<const Tensor> inputs, BackwardFn backward);
Tensor make_result(std::string_view op, Shape shape, std::vector<double> values,
                   std::initializer_list<Tensor> inputs, BackwardFn backward);

// Gradient buffer of an input inside a backward rule; null when the input
// does not take part in differentiation.
double* grad_buffer(const Tensor& t);

}  // namespace detail

}  // namespace uda
