#pragma once

#include <vector>

#include "uda/tensor.hpp"

namespace uda {

struct Embedding2D {
  Tensor points;                        // [n x 2], centred
  std::vector<double> explained_variance;  // two leading eigenvalues
  double total_variance = 0.0;          // trace of the covariance
};

/// Projection of the rows of `features` onto their top two principal
/// components. Each component's sign is chosen so its largest-magnitude
/// loading is positive. Needs at least three rows; a feature dimension of
/// one yields a zero second coordinate.
Embedding2D pca_2d(const Tensor& features);

}  // namespace uda
