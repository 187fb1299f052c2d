#include "uda/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "uda/errors.hpp"

namespace uda {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) {
    n *= extent;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    out << (i ? "x" : "") << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor() : impl_(std::make_shared<detail::TensorImpl>()) {
  impl_->values.assign(1, 0.0);
}

Tensor::Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw ShapeError("tensor of shape " + shape_string(shape) + " cannot hold " +
                     std::to_string(values.size()) + " values");
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite value in tensor constructor");
    }
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return from({n}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return from({rows, cols}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows,
                      bool requires_grad) {
  const std::size_t n = rows.size();
  const std::size_t m = n ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(n * m);
  for (const auto& row : rows) {
    if (row.size() != m) {
      throw ShapeError("ragged matrix literal");
    }
    values.insert(values.end(), row.begin(), row.end());
  }
  return from({n, m}, std::move(values), requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

std::size_t Tensor::rows() const {
  if (rank() != 2) {
    throw ShapeError("expected a matrix, got shape " + shape_string(shape()));
  }
  return impl_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) {
    throw ShapeError("expected a matrix, got shape " + shape_string(shape()));
  }
  return impl_->shape[1];
}

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  }
  return impl_->values[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  return impl_->values[row * cols() + col];
}

std::span<double> Tensor::mutable_values() {
  if (!is_leaf()) {
    throw Error("mutable_values() on a non-leaf tensor");
  }
  return impl_->values;
}

void Tensor::set_requires_grad(bool on) {
  if (!is_leaf()) {
    throw Error("set_requires_grad() on a non-leaf tensor");
  }
  impl_->requires_grad = on;
}

void Tensor::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = impl_->shape;
  impl->values = impl_->values;
  return Tensor(std::move(impl));
}

void Tensor::backward() const {
  if (size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_string(shape()));
  }
  Tape::record(*this).backward();
}

Tape Tape::record(const Tensor& root) {
  Tape tape;
  tape.root_ = root.impl();

  // Iterative post-order DFS; a node is emitted after all of its inputs.
  std::unordered_set<const detail::TensorImpl*> visited;
  std::vector<std::pair<std::shared_ptr<detail::TensorImpl>, std::size_t>> stack;
  stack.emplace_back(root.impl(), 0);
  visited.insert(root.impl().get());
  while (!stack.empty()) {
    auto& [impl, next_input] = stack.back();
    if (impl->node && next_input < impl->node->inputs.size()) {
      auto child = impl->node->inputs[next_input++];
      if (child->requires_grad && visited.insert(child.get()).second) {
        stack.emplace_back(std::move(child), 0);
      }
      continue;
    }
    tape.order_.push_back(impl);
    stack.pop_back();
  }
  return tape;
}

std::vector<std::string_view> Tape::ops() const {
  std::vector<std::string_view> names;
  for (const auto& impl : order_) {
    if (impl->node) {
      names.push_back(impl->node->op);
    }
  }
  return names;
}

void Tape::backward() {
  if (!root_->requires_grad) {
    return;
  }
  for (const auto& impl : order_) {
    if (impl->node || impl->grad.size() != impl->values.size()) {
      impl->grad.assign(impl->values.size(), 0.0);
    }
  }
  root_->grad[0] += 1.0;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    const auto& impl = *it;
    if (impl->node) {
      impl->node->backward(impl->grad);
    }
  }
}

namespace detail {

Tensor make_result(std::string_view op, Shape shape, std::vector<double> values,
                   std::initializer_list<Tensor> inputs, BackwardFn backward) {
  return make_result(op, std::move(shape), std::move(values),
                     std::span<const Tensor>(inputs.begin(), inputs.size()), std::move(backward));
}

Tensor make_result(std::string_view op, Shape shape, std::vector<double> values,
                   std::span<const Tensor> inputs, BackwardFn backward) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + " produced a non-finite value");
    }
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->values = std::move(values);
  const bool tracked =
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (tracked) {
    impl->requires_grad = true;
    auto node = std::make_shared<Node>();
    node->op = op;
    for (const auto& t : inputs) {
      node->inputs.push_back(t.impl());
    }
    node->backward = std::move(backward);
    impl->node = std::move(node);
  }
  return Tensor(std::move(impl));
}

double* grad_buffer(const Tensor& t) {
  auto& impl = *t.impl();
  if (!impl.requires_grad || impl.grad.size() != impl.values.size()) {
    return nullptr;
  }
  return impl.grad.data();
}

}  // namespace detail

}  // namespace uda
