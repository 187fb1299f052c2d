#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "uda/tensor.hpp"

namespace uda {

struct GradcheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_tensor = 0;  // index into the checked tensors
  std::size_t worst_index = 0;   // flat coordinate inside that tensor
  double analytic = 0.0;         // gradients at the worst coordinate
  double numeric = 0.0;
};

// Relative error used throughout: |a - n| / max(1e-12, |a| + |n|).
double gradcheck_relative_error(double analytic, double numeric);

/// Compares the backward pass of a scalar function against central finite
/// differences. `x` supplies the evaluation point; the function receives a
/// fresh leaf each time, so `x` itself is never modified.
GradcheckReport gradcheck(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                          double step = 1e-5);

/// Same check over a set of leaf tensors that `loss` closes over (model
/// parameters). The leaves are perturbed in place and restored bit-exactly.
GradcheckReport gradcheck_leaves(const std::function<Tensor()>& loss, std::span<Tensor> leaves,
                                 double step = 1e-5);

}  // namespace uda
