#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uda/adversarial.hpp"
#include "uda/data.hpp"
#include "uda/models.hpp"
#include "uda/tensor.hpp"

namespace uda {

/// Every scalar of the composite objective and its optimization.
///
/// Loss coefficients: beta (information maximization), gamma (minimum class
/// confusion), delta (MMD), eta (pseudo-label MMD). The adversarial weight
/// follows lambda(p) = lambda_max (2 / (1 + exp(-10 p)) - 1) and scales only
/// the reversed gradient reaching the feature extractor. A coefficient that is
/// exactly zero skips its loss entirely.
struct TrainConfig {
  double lr = 1e-5;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  double beta = 0.05;
  double gamma = 1.4;
  double delta = 0.54;
  double eta = 0.54;
  double lambda_max = 1.0;
  double temperature = 2.5;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 1e-3;

  std::uint64_t seed = 0;

  ConditioningOptions conditioning;
  std::size_t kernel_count = 5;
  double kernel_base = 2.0;

  // Feature extractor widths after the input layer, and the single hidden
  // width of the discriminator.
  std::vector<std::size_t> feature_widths = {64, 32};
  std::size_t discriminator_hidden = 64;

  void validate() const;

  // Same config with every adaptation coefficient set to zero.
  TrainConfig source_only() const;
};

struct LossBreakdown {
  double clc = 0.0;
  double dis = 0.0;
  double im = 0.0;
  double mcc = 0.0;
  double mmd = 0.0;
  double plmmd = 0.0;
  double total = 0.0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  LossBreakdown losses;  // means over the epoch's steps
  double lambda = 0.0;   // value at the epoch's last step
  double source_accuracy = 0.0;
  std::optional<double> target_accuracy;  // only when target labels exist
  double wall_seconds = 0.0;
};

/// Feature extractor F, classifier head N, domain discriminator D and the
/// conditioning map feeding D.
struct Networks {
  Model feature;
  Model classifier;
  Model discriminator;
  ConditioningMap conditioning;

  // F then N then D, in optimizer order.
  std::vector<Tensor*> parameters();
  std::vector<std::string> parameter_names() const;
};

// F = [d_in, feature_widths...] ReLU, N = [d_f, K], D = [cond, hidden, 1]
// sigmoid. Seeds derive from cfg.seed.
Networks build_networks(const TrainConfig& cfg, std::size_t input_dim, std::size_t classes);

struct DomainBatch {
  Tensor source_features;
  std::vector<int> source_labels;
  Tensor target_features;
};

// Mean cross-entropy of softmax(logits) against integer labels.
Tensor classification_loss(const Tensor& logits, std::span<const int> labels);

// softmax(N(F(x))) at temperature 1, detached.
Tensor pseudo_labels(const Model& feature, const Model& classifier, const Tensor& x);

double lambda_schedule(double progress, double lambda_max);

struct CompositeLoss {
  Tensor total;
  LossBreakdown breakdown;
  double lambda = 0.0;
};

/// L_clc + L_dis + beta L_IM + gamma L_MCC + delta L_MMD + eta L_PLMMD for one
/// batch pair at training progress p in [0, 1]. L_dis enters with weight one
/// so the discriminator descends it unscaled; the feature extractor receives
/// -lambda(p) times its gradient through gradient reversal.
CompositeLoss composite_loss(const DomainBatch& batch, const Networks& nets,
                             const TrainConfig& cfg, double progress);

/// Adam with bias correction and decoupled weight decay:
///   theta <- theta (1 - lr wd);  theta <- theta - lr m_hat / (sqrt(v_hat) + eps).
class AdamW {
 public:
  AdamW(double lr, double beta1, double beta2, double eps, double weight_decay);
  explicit AdamW(const TrainConfig& cfg);

  // Applies one update to every tensor, using its current gradient (zero when
  // absent). Throws NumericError naming the first parameter whose gradient is
  // not finite; no parameter is modified in that case.
  void step(std::span<Tensor* const> params, std::span<const std::string> names = {});

  std::size_t steps_taken() const { return step_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  double weight_decay_;
  std::size_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// The paired source/target index batches train() uses for `epoch`.
std::vector<StepIndices> epoch_batches(const TrainConfig& cfg, std::size_t n_source,
                                       std::size_t n_target, std::size_t epoch);

// argmax of N(F(x)) per row, ties to the lowest class index.
std::vector<int> predict(const Model& feature, const Model& classifier, const Tensor& x);

// Fraction of rows whose prediction equals the label; needs labels.
double evaluate(const Model& feature, const Model& classifier, const DomainDataset& ds);

struct TrainResult {
  Networks networks;
  std::vector<EpochMetrics> metrics;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Joint training of F, N and D: per step one composite forward, one backward
/// and one AdamW update over all three networks. The target dataset is
/// consumed through an UnlabeledView; its labels only feed the per-epoch
/// target accuracy.
TrainResult train(const TrainConfig& cfg, const DomainDataset& source, const DomainDataset& target,
                  const EpochCallback& on_epoch = {});

}  // namespace uda
