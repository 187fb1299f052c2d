#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uda/tensor.hpp"

// Differentiable primitives. Every function validates shapes, produces finite
// values or throws, and records its backward rule when an input requires a
// gradient. Broadcasting is limited to size-1 scalars in the binary
// elementwise ops plus the explicit row-wise helpers.
namespace uda {

// Elementwise and scalar broadcast.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor scale(const Tensor& a, double c);
Tensor negate(const Tensor& a);
Tensor exp(const Tensor& a);
// Throws DomainError on any non-positive input.
Tensor log(const Tensor& a);
// log(max(eps, a)); zero gradient where the clamp is active.
Tensor clamped_log(const Tensor& a, double eps);
// max(eps, a); zero gradient where the clamp is active.
Tensor clamp_min(const Tensor& a, double eps);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return negate(a); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }

// Reductions.
Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar; empty input is a ParameterError
Tensor row_sums(const Tensor& a);     // [n x m] -> [n]
Tensor column_sums(const Tensor& a);  // [n x m] -> [m]
Tensor column_means(const Tensor& a); // [n x m] -> [m]

// Linear algebra and layout.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);

// Row-wise broadcast. `v` has one entry per column (add_row) or per row
// (scale_rows, div_rows); rank-1 or a single row/column matrix is accepted.
Tensor add_row(const Tensor& a, const Tensor& v);
Tensor scale_rows(const Tensor& a, const Tensor& v);
Tensor div_rows(const Tensor& a, const Tensor& v);

// Row-wise softmax of logits / temperature, stabilized by the row maximum.
Tensor softmax(const Tensor& logits, double temperature = 1.0);
Tensor log_softmax(const Tensor& logits, double temperature = 1.0);

// [n x d] x [m x d] -> [n x m] squared Euclidean distances.
Tensor squared_distances(const Tensor& x, const Tensor& y);

// Row i of the result is the flattened outer product x_i y_i^T.
Tensor outer_rows(const Tensor& x, const Tensor& y);

// Identity forward; backward multiplies the upstream gradient by -scale.
Tensor grad_reverse(const Tensor& a, double scale);

// Constant identity matrix.
Tensor identity(std::size_t n);

// Constant [labels.size() x classes] one-hot matrix.
Tensor one_hot(std::span<const int> labels, std::size_t classes);

}  // namespace uda
