#include "uda/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "uda/errors.hpp"
#include "uda/kernel_mmd.hpp"
#include "uda/ops.hpp"
#include "uda/random.hpp"
#include "uda/target_losses.hpp"

namespace uda {

namespace {

// Stream indices for derive_seed(cfg.seed, ...).
constexpr std::uint64_t kFeatureStream = 1;
constexpr std::uint64_t kClassifierStream = 2;
constexpr std::uint64_t kDiscriminatorStream = 3;
constexpr std::uint64_t kConditioningStream = 4;
constexpr std::uint64_t kBatchStream = 5;

void require_finite(const char* name, double v) {
  if (!std::isfinite(v)) {
    throw ParameterError(std::string("train config: ") + name + " must be finite");
  }
}

std::string describe(const LossBreakdown& b) {
  std::ostringstream out;
  out << "clc=" << b.clc << " dis=" << b.dis << " im=" << b.im << " mcc=" << b.mcc
      << " mmd=" << b.mmd << " plmmd=" << b.plmmd;
  return out.str();
}

}  // namespace

void TrainConfig::validate() const {
  for (auto [name, v] : {std::pair{"lr", lr}, {"beta", beta}, {"gamma", gamma}, {"delta", delta},
                         {"eta", eta}, {"lambda_max", lambda_max}, {"temperature", temperature},
                         {"adam_beta1", adam_beta1}, {"adam_beta2", adam_beta2},
                         {"adam_eps", adam_eps}, {"weight_decay", weight_decay},
                         {"kernel_base", kernel_base}}) {
    require_finite(name, v);
  }
  if (!(lr > 0.0)) throw ParameterError("train config: lr must be positive");
  if (batch_size == 0) throw ParameterError("train config: batch_size must be positive");
  if (epochs == 0) throw ParameterError("train config: epochs must be positive");
  if (lambda_max < 0.0) throw ParameterError("train config: lambda_max must be >= 0");
  if (!(temperature > 0.0)) throw ParameterError("train config: temperature must be positive");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
    throw ParameterError("train config: Adam momentum coefficients must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ParameterError("train config: adam_eps must be positive");
  if (weight_decay < 0.0) throw ParameterError("train config: weight_decay must be >= 0");
  if (kernel_count == 0 || !(kernel_base > 0.0)) {
    throw ParameterError("train config: kernel ladder needs count >= 1 and base > 0");
  }
  if (feature_widths.empty() || discriminator_hidden == 0) {
    throw ParameterError("train config: network widths must be non-empty and positive");
  }
  for (auto w : feature_widths) {
    if (w == 0) throw ParameterError("train config: network widths must be positive");
  }
  if (conditioning.random_dim == 0) {
    throw ParameterError("train config: conditioning random_dim must be positive");
  }
}

TrainConfig TrainConfig::source_only() const {
  TrainConfig cfg = *this;
  cfg.beta = cfg.gamma = cfg.delta = cfg.eta = 0.0;
  cfg.lambda_max = 0.0;
  return cfg;
}

std::vector<Tensor*> Networks::parameters() {
  std::vector<Tensor*> out;
  for (Model* m : {&feature, &classifier, &discriminator}) {
    for (auto& p : m->parameters()) out.push_back(&p);
  }
  return out;
}

std::vector<std::string> Networks::parameter_names() const {
  std::vector<std::string> out;
  for (auto [prefix, m] : {std::pair{"feature.", &feature}, {"classifier.", &classifier},
                           {"discriminator.", &discriminator}}) {
    for (std::size_t i = 0; i < m->parameters().size(); ++i) {
      out.push_back(prefix + m->parameter_name(i));
    }
  }
  return out;
}

Networks build_networks(const TrainConfig& cfg, std::size_t input_dim, std::size_t classes) {
  cfg.validate();
  if (input_dim == 0 || classes == 0) {
    throw ParameterError("networks need a positive input dimension and class count");
  }
  MLPSpec feature_spec;
  feature_spec.layer_widths.push_back(input_dim);
  feature_spec.layer_widths.insert(feature_spec.layer_widths.end(), cfg.feature_widths.begin(),
                                   cfg.feature_widths.end());
  const std::size_t feature_dim = feature_spec.output_dim();
  const MLPSpec classifier_spec{{feature_dim, classes}, FinalActivation::none};
  auto conditioning = ConditioningMap::select(feature_dim, classes, cfg.conditioning,
                                              derive_seed(cfg.seed, kConditioningStream));
  const MLPSpec discriminator_spec{{conditioning.output_dim(), cfg.discriminator_hidden, 1},
                                   FinalActivation::sigmoid};
  return Networks{init_model(feature_spec, derive_seed(cfg.seed, kFeatureStream)),
                  init_model(classifier_spec, derive_seed(cfg.seed, kClassifierStream)),
                  init_model(discriminator_spec, derive_seed(cfg.seed, kDiscriminatorStream)),
                  std::move(conditioning)};
}

Tensor classification_loss(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.rows() != labels.size()) {
    throw ShapeError("classification_loss: one label per logit row required");
  }
  if (labels.empty()) {
    throw ParameterError("classification_loss: empty batch");
  }
  const Tensor targets = one_hot(labels, logits.cols());
  return scale(sum(mul(targets, log_softmax(logits))), -1.0 / static_cast<double>(labels.size()));
}

Tensor pseudo_labels(const Model& feature, const Model& classifier, const Tensor& x) {
  return softmax(classifier.forward(feature.forward(x)).detach());
}

double lambda_schedule(double progress, double lambda_max) {
  if (progress < 0.0 || progress > 1.0) {
    throw ParameterError("lambda_schedule: progress must lie in [0, 1]");
  }
  return lambda_max * (2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0);
}

CompositeLoss composite_loss(const DomainBatch& batch, const Networks& nets,
                             const TrainConfig& cfg, double progress) {
  CompositeLoss out;
  out.lambda = lambda_schedule(progress, cfg.lambda_max);

  const Tensor f_source = nets.feature.forward(batch.source_features);
  const Tensor logits_source = nets.classifier.forward(f_source);
  const Tensor clc = classification_loss(logits_source, batch.source_labels);
  out.breakdown.clc = clc.item();
  Tensor total = clc;

  const bool adapt = cfg.lambda_max != 0.0 || cfg.beta != 0.0 || cfg.gamma != 0.0 ||
                     cfg.delta != 0.0 || cfg.eta != 0.0;
  if (adapt) {
    const Tensor f_target = nets.feature.forward(batch.target_features);
    const Tensor logits_target = nets.classifier.forward(f_target);

    if (cfg.lambda_max != 0.0) {
      const Tensor g_source = softmax(logits_source).detach();
      const Tensor g_target = softmax(logits_target).detach();
      const Tensor dis = cdan_adversarial_loss(f_source, g_source, f_target, g_target,
                                               nets.discriminator, nets.conditioning, out.lambda);
      out.breakdown.dis = dis.item();
      total = add(total, dis);
    }
    if (cfg.beta != 0.0) {
      const Tensor im = im_loss(softmax(logits_target));
      out.breakdown.im = im.item();
      total = add(total, scale(im, cfg.beta));
    }
    if (cfg.gamma != 0.0) {
      const Tensor mcc = mcc_loss(logits_target, cfg.temperature);
      out.breakdown.mcc = mcc.item();
      total = add(total, scale(mcc, cfg.gamma));
    }
    if (cfg.delta != 0.0 || cfg.eta != 0.0) {
      const KernelConfig kernel =
          batch_kernel(f_source.detach(), f_target.detach(), cfg.kernel_count, cfg.kernel_base);
      if (cfg.delta != 0.0) {
        const Tensor mmd = mmd2_biased(f_source, f_target, kernel);
        out.breakdown.mmd = mmd.item();
        total = add(total, scale(mmd, cfg.delta));
      }
      if (cfg.eta != 0.0) {
        const WeightTriple weights =
            plmmd_weights(one_hot(batch.source_labels, logits_source.cols()),
                          softmax(logits_target.detach()));
        const Tensor pl = plmmd(f_source, f_target, weights, kernel);
        out.breakdown.plmmd = pl.item();
        total = add(total, scale(pl, cfg.eta));
      }
    }
  }
  out.breakdown.total = total.item();
  out.total = std::move(total);
  return out;
}

AdamW::AdamW(double lr, double beta1, double beta2, double eps, double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

AdamW::AdamW(const TrainConfig& cfg)
    : AdamW(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.weight_decay) {}

void AdamW::step(std::span<Tensor* const> params, std::span<const std::string> names) {
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }
  if (m_.size() != params.size()) {
    throw ParameterError("AdamW: parameter set changed between steps");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor& p = *params[k];
    if (!p.has_grad()) continue;
    for (double g : p.grad()) {
      if (!std::isfinite(g)) {
        const std::string name = k < names.size() ? names[k] : "#" + std::to_string(k);
        throw NumericError("non-finite gradient in parameter " + name);
      }
    }
  }

  ++step_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  const double decay = 1.0 - lr_ * weight_decay_;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    auto theta = p.mutable_values();
    const bool has_grad = p.has_grad();
    const auto grad = p.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = has_grad ? grad[i] : 0.0;
      theta[i] *= decay;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

std::vector<int> predict(const Model& feature, const Model& classifier, const Tensor& x) {
  const Tensor logits = classifier.forward(feature.forward(x));
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

double evaluate(const Model& feature, const Model& classifier, const DomainDataset& ds) {
  if (!ds.labels) {
    throw ParameterError("evaluate: dataset has no labels");
  }
  if (ds.size() == 0) {
    throw ParameterError("evaluate: dataset is empty");
  }
  const auto predictions = predict(feature, classifier, ds.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    correct += predictions[i] == (*ds.labels)[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

std::vector<StepIndices> epoch_batches(const TrainConfig& cfg, std::size_t n_source,
                                       std::size_t n_target, std::size_t epoch) {
  return paired_batches(n_source, n_target, cfg.batch_size, derive_seed(cfg.seed, kBatchStream),
                        epoch);
}

TrainResult train(const TrainConfig& cfg, const DomainDataset& source, const DomainDataset& target,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (!source.labels) {
    throw ParameterError("train: source dataset must be labelled");
  }
  source.validate();
  if (target.dim() != source.dim()) {
    throw ShapeError("train: source and target feature dimensions differ");
  }
  if (source.size() == 0 || target.size() == 0) {
    throw ParameterError("train: both domains need at least one sample");
  }
  const UnlabeledView target_view(target);

  TrainResult result{build_networks(cfg, source.dim(), source.class_count), {}};
  Networks& nets = result.networks;
  auto params = nets.parameters();
  const auto names = nets.parameter_names();
  AdamW optimizer(cfg);

  const std::size_t steps_per_epoch = epoch_batches(cfg, source.size(), target_view.size(), 0).size();
  const auto total_steps = static_cast<double>(steps_per_epoch * cfg.epochs);
  std::size_t global_step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const auto steps = epoch_batches(cfg, source.size(), target_view.size(), epoch);
    EpochMetrics metrics;
    metrics.epoch = epoch;
    for (const auto& step : steps) {
      DomainBatch batch{source.gather(step.source), source.gather_labels(step.source),
                        target_view.gather(step.target)};
      const double progress = static_cast<double>(global_step) / total_steps;
      for (Tensor* p : params) p->zero_grad();
      CompositeLoss loss;
      try {
        loss = composite_loss(batch, nets, cfg, progress);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " step " +
                           std::to_string(global_step) + ": " + e.what());
      }
      loss.total.backward();
      try {
        optimizer.step(params, names);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " step " +
                           std::to_string(global_step) + " (" + describe(loss.breakdown) +
                           "): " + e.what());
      }
      auto& acc = metrics.losses;
      acc.clc += loss.breakdown.clc;
      acc.dis += loss.breakdown.dis;
      acc.im += loss.breakdown.im;
      acc.mcc += loss.breakdown.mcc;
      acc.mmd += loss.breakdown.mmd;
      acc.plmmd += loss.breakdown.plmmd;
      acc.total += loss.breakdown.total;
      metrics.lambda = loss.lambda;
      ++global_step;
    }
    const auto count = static_cast<double>(steps.size());
    for (double* v : {&metrics.losses.clc, &metrics.losses.dis, &metrics.losses.im,
                      &metrics.losses.mcc, &metrics.losses.mmd, &metrics.losses.plmmd,
                      &metrics.losses.total}) {
      *v /= count;
    }
    metrics.source_accuracy = evaluate(nets.feature, nets.classifier, source);
    if (target.labels) {
      metrics.target_accuracy = evaluate(nets.feature, nets.classifier, target);
    }
    metrics.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (on_epoch) on_epoch(metrics);
    result.metrics.push_back(metrics);
  }
  return result;
}

}  // namespace uda
