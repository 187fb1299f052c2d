#include "uda/target_losses.hpp"

#include <cmath>
#include <string>

#include "uda/errors.hpp"
#include "uda/ops.hpp"

namespace uda {

namespace {

void require_probability_rows(const char* op, const Tensor& probs) {
  if (probs.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected an [n x K] matrix");
  }
  const std::size_t k = probs.cols();
  const auto p = probs.values();
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (p[i * k + j] < 0.0) {
        throw DomainError(std::string(op) + ": negative probability in row " + std::to_string(i));
      }
      row += p[i * k + j];
    }
    if (std::abs(row - 1.0) > 1e-6) {
      throw DomainError(std::string(op) + ": row " + std::to_string(i) + " sums to " +
                        std::to_string(row));
    }
  }
}

// Entropy without validation, for softmax outputs that are valid by
// construction.
Tensor row_entropy(const Tensor& probs) {
  return negate(row_sums(mul(probs, clamped_log(probs, kLogEps))));
}

}  // namespace

Tensor entropy(const Tensor& probs) {
  require_probability_rows("entropy", probs);
  return row_entropy(probs);
}

Tensor uncertainty_weights(const Tensor& logits, double temperature) {
  if (logits.rank() != 2 || logits.rows() == 0) {
    throw ShapeError("uncertainty_weights: expected a non-empty [n x K] matrix");
  }
  const auto n = static_cast<double>(logits.rows());
  const Tensor h = row_entropy(softmax(logits, temperature));
  const Tensor w = add_scalar(exp(negate(h)), 1.0);
  return scale(div(w, sum(w)), n);
}

Tensor mcc_loss(const Tensor& logits, double temperature) {
  if (logits.rank() != 2 || logits.rows() == 0) {
    throw ShapeError("mcc_loss: expected a non-empty [n x K] matrix");
  }
  const std::size_t k = logits.cols();
  if (k < 2) {
    throw ParameterError("mcc_loss: class confusion needs at least two classes");
  }
  const Tensor probs = softmax(logits, temperature);
  const Tensor weights = uncertainty_weights(logits, temperature);
  const Tensor confusion = matmul(transpose(probs), scale_rows(probs, weights));
  const Tensor normalized = div_rows(confusion, clamp_min(row_sums(confusion), kLogEps));
  const Tensor off_diagonal = sub(sum(normalized), sum(mul(normalized, identity(k))));
  return scale(off_diagonal, 1.0 / static_cast<double>(k));
}

Tensor im_loss(const Tensor& probs) {
  require_probability_rows("im_loss", probs);
  if (probs.rows() == 0) {
    throw ParameterError("im_loss: empty batch");
  }
  const std::size_t k = probs.cols();
  const Tensor marginal = reshape(column_means(probs), {1, k});
  const Tensor marginal_entropy = sum(row_entropy(marginal));
  const Tensor conditional_entropy = mean(row_entropy(probs));
  return sub(conditional_entropy, marginal_entropy);
}

}  // namespace uda
