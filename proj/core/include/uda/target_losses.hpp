#pragma once

#include "uda/tensor.hpp"

namespace uda {

// Clamp applied inside every log of a probability.
inline constexpr double kLogEps = 1e-12;

// Per-row Shannon entropy -sum_j p_ij log(max(eps, p_ij)) of an [n x K]
// probability matrix. Rows must be non-negative and sum to 1 within 1e-6.
Tensor entropy(const Tensor& probs);

/// Diagonal of the sample weighting used by the class-confusion loss:
/// W_ii = n (1 + exp(-H_i)) / sum_k (1 + exp(-H_k)), with H_i the entropy of
/// softmax(logits / T) for row i. Confident rows weigh more; the weights sum
/// to n.
Tensor uncertainty_weights(const Tensor& logits, double temperature);

/// Minimum class confusion. With Y = softmax(logits / T) and W the weights
/// above, C = Y^T diag(W) Y is row-normalized (rows with no mass stay zero)
/// and the off-diagonal mass divided by K is returned. Requires K >= 2.
Tensor mcc_loss(const Tensor& logits, double temperature);

/// Negative mutual information between inputs and predicted labels:
///   -(H(mean_i p_i) - mean_i H(p_i)).
/// Takes probabilities, not logits.
Tensor im_loss(const Tensor& probs);

}  // namespace uda
