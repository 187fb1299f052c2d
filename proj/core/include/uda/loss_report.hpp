#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "uda/tensor.hpp"

namespace uda {

/// Externally supplied arrays for evaluating every loss at once.
struct LossInputs {
  Tensor source_features;  // [n_s x d]
  std::vector<int> source_labels;
  Tensor target_features;  // [n_t x d]
  Tensor target_logits;    // [n_t x K]
  std::optional<Tensor> disc_source;  // discriminator outputs in [0, 1]
  std::optional<Tensor> disc_target;
  double temperature = 2.5;
  std::size_t kernel_count = 5;
  double kernel_base = 2.0;

  void validate() const;
};

struct LossValues {
  double mmd = 0.0;
  double plmmd = 0.0;
  double mcc = 0.0;
  double im = 0.0;
  std::optional<double> dis;
  std::vector<double> bandwidths;
};

/// Library route: median-heuristic kernel ladder on the pooled features,
/// MMD and pseudo-label MMD on the features (pseudo labels are
/// softmax(target_logits)), MCC on the target logits at `temperature`, IM on
/// softmax(target_logits), and the discriminator loss when both output arrays
/// are present.
LossValues compute_losses(const LossInputs& inputs);

}  // namespace uda
