#pragma once

#include <cstddef>
#include <vector>

#include "uda/tensor.hpp"

namespace uda {

/// Equal-weight sum of Gaussian kernels exp(-|x - y|^2 / (2 sigma^2)).
struct KernelConfig {
  std::vector<double> bandwidths;

  // Throws ParameterError unless non-empty and strictly positive.
  void validate() const;

  static KernelConfig single(double sigma);
  // `count` bandwidths sigma * base^k, k = -(count/2) .. count/2 (count odd
  // gives a symmetric ladder; 5 and 2 give sigma * 2^{-2..2}).
  static KernelConfig ladder(double sigma, std::size_t count = 5, double base = 2.0);
};

// Bandwidth sigma with 2 sigma^2 equal to the median of the pooled pairwise
// squared distances, zero distances excluded; 1 when every distance is zero.
// Even counts use the mean of the two middle values.
double median_heuristic(const Tensor& x, const Tensor& y);

// Ladder around the median heuristic of the (detached) pooled sample.
KernelConfig batch_kernel(const Tensor& x, const Tensor& y, std::size_t count = 5,
                          double base = 2.0);

Tensor gaussian_gram(const Tensor& x, const Tensor& y, const KernelConfig& cfg);

/// Biased (V-statistic) squared MMD:
///   mean K(x,x) - 2 mean K(x,y) + mean K(y,y), diagonal terms included.
Tensor mmd2_biased(const Tensor& x, const Tensor& y, const KernelConfig& cfg);

/// Pairwise weights of the pseudo-label MMD. Constant matrices; no gradient
/// flows through them.
struct WeightTriple {
  Tensor source_source;  // n_s x n_s
  Tensor source_target;  // n_s x n_t
  Tensor target_target;  // n_t x n_t
  std::size_t common_classes = 0;

  bool has_common_class() const { return common_classes > 0; }
};

// Target classes whose pseudo-label column mass is at most this are ignored.
inline constexpr double kCommonClassMass = 1e-6;

/// Builds the weights from one-hot source labels and soft target
/// probabilities. For every class c present on both sides the columns are
/// scaled to unit mass (a_c, b_c) and the outer products a_c a_c^T,
/// a_c b_c^T, b_c b_c^T are accumulated, then divided by the number of common
/// classes. With no common class all three matrices are zero and
/// common_classes is 0.
WeightTriple plmmd_weights(const Tensor& source_onehot, const Tensor& target_probs);

/// sum(W_ss * K(x,x)) - 2 sum(W_st * K(x,y)) + sum(W_tt * K(y,y)).
Tensor plmmd(const Tensor& x, const Tensor& y, const WeightTriple& w, const KernelConfig& cfg);

}  // namespace uda
