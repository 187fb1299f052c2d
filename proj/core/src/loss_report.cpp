#include "uda/loss_report.hpp"

#include "uda/adversarial.hpp"
#include "uda/errors.hpp"
#include "uda/kernel_mmd.hpp"
#include "uda/ops.hpp"
#include "uda/target_losses.hpp"

namespace uda {

void LossInputs::validate() const {
  if (source_features.rank() != 2 || target_features.rank() != 2 || target_logits.rank() != 2) {
    throw ShapeError("loss inputs must be matrices");
  }
  if (source_features.cols() != target_features.cols()) {
    throw ShapeError("source and target feature widths differ");
  }
  if (source_labels.size() != source_features.rows()) {
    throw ShapeError("one source label per source feature row required");
  }
  if (target_logits.rows() != target_features.rows()) {
    throw ShapeError("one target logit row per target feature row required");
  }
  if (source_features.rows() == 0 || target_features.rows() == 0) {
    throw ParameterError("loss inputs need at least one row per domain");
  }
  if (disc_source.has_value() != disc_target.has_value()) {
    throw ParameterError("discriminator outputs must be given for both domains");
  }
}

LossValues compute_losses(const LossInputs& inputs) {
  inputs.validate();
  const KernelConfig kernel = batch_kernel(inputs.source_features, inputs.target_features,
                                           inputs.kernel_count, inputs.kernel_base);
  const Tensor probs = softmax(inputs.target_logits);
  LossValues out;
  out.bandwidths = kernel.bandwidths;
  out.mmd = mmd2_biased(inputs.source_features, inputs.target_features, kernel).item();
  const WeightTriple weights =
      plmmd_weights(one_hot(inputs.source_labels, inputs.target_logits.cols()), probs);
  out.plmmd = plmmd(inputs.source_features, inputs.target_features, weights, kernel).item();
  out.mcc = mcc_loss(inputs.target_logits, inputs.temperature).item();
  out.im = im_loss(probs).item();
  if (inputs.disc_source) {
    out.dis = domain_disc_loss(*inputs.disc_source, *inputs.disc_target).item();
  }
  return out;
}

}  // namespace uda
