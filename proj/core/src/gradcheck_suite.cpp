#include "uda/gradcheck_suite.hpp"

#include <functional>

#include "uda/adversarial.hpp"
#include "uda/errors.hpp"
#include "uda/gradcheck.hpp"
#include "uda/kernel_mmd.hpp"
#include "uda/models.hpp"
#include "uda/ops.hpp"
#include "uda/random.hpp"
#include "uda/target_losses.hpp"
#include "uda/trainer.hpp"

namespace uda {

namespace {

constexpr std::size_t kInputDim = 3;
constexpr std::size_t kHidden = 5;
constexpr std::size_t kOutputDim = 3;
constexpr std::size_t kSourceRows = 6;
constexpr std::size_t kTargetRows = 5;

Tensor random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double spread) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = spread * rng.normal();
  return Tensor::matrix(rows, cols, std::move(v));
}

Tensor random_probs(Rng& rng, std::size_t rows, std::size_t cols) {
  return softmax(random_matrix(rng, rows, cols, 1.5));
}

std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t classes) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    // First `classes` rows cover every class.
    labels[i] = static_cast<int>(i < classes ? i : rng.below(classes));
  }
  return labels;
}

// Fixture for one seed: a two-layer MLP producing [n x 3] outputs used as
// logits or features depending on the loss.
struct Fixture {
  Model net;
  Model discriminator;
  Tensor xs;
  Tensor xt;
  std::vector<int> labels;
  Tensor gs;
  Tensor gt;
  Tensor target_probs;

  explicit Fixture(std::uint64_t seed)
      : net(init_model(MLPSpec{{kInputDim, kHidden, kOutputDim}, FinalActivation::none},
                       derive_seed(seed, 11))),
        discriminator(init_model(
            MLPSpec{{kOutputDim * kOutputDim, 1}, FinalActivation::sigmoid}, derive_seed(seed, 12))) {
    Rng rng(derive_seed(seed, 13));
    xs = random_matrix(rng, kSourceRows, kInputDim, 1.0);
    xt = add_scalar(random_matrix(rng, kTargetRows, kInputDim, 1.0), 0.5);
    labels = random_labels(rng, kSourceRows, kOutputDim);
    gs = random_probs(rng, kSourceRows, kOutputDim);
    gt = random_probs(rng, kTargetRows, kOutputDim);
    target_probs = random_probs(rng, kTargetRows, kOutputDim);
  }
};

// Returns the loss as a function of the fixture's current parameters.
using LossFactory = std::function<std::function<Tensor()>(const Fixture&)>;

struct SuiteEntry {
  std::string name;
  LossFactory make;
  bool includes_discriminator = false;
  // Kernel losses only see differences of feature rows, so the gradient of
  // the output bias is identically zero and its relative error is pure noise.
  bool skips_output_bias = false;
};

std::vector<SuiteEntry> suite_entries() {
  std::vector<SuiteEntry> entries;
  entries.push_back({"clc", [](const Fixture& fx) -> std::function<Tensor()> {
                       return [&fx] { return classification_loss(fx.net.forward(fx.xs), fx.labels); };
                     }});
  entries.push_back({"dis",
                     [](const Fixture& fx) -> std::function<Tensor()> {
                       return [&fx] {
                         const auto map = ConditioningMap::exact(kOutputDim, kOutputDim);
                         const Tensor hs = map.apply(fx.net.forward(fx.xs), fx.gs);
                         const Tensor ht = map.apply(fx.net.forward(fx.xt), fx.gt);
                         return domain_disc_loss(fx.discriminator.forward(hs),
                                                 fx.discriminator.forward(ht));
                       };
                     },
                     true});
  entries.push_back({"mmd", [](const Fixture& fx) -> std::function<Tensor()> {
                       // Bandwidths are frozen at the unperturbed point, as in
                       // training where they come from detached features.
                       const KernelConfig kernel =
                           batch_kernel(fx.net.forward(fx.xs).detach(), fx.net.forward(fx.xt).detach());
                       return [&fx, kernel] {
                         return mmd2_biased(fx.net.forward(fx.xs), fx.net.forward(fx.xt), kernel);
                       };
                     },
                     false, true});
  entries.push_back({"plmmd", [](const Fixture& fx) -> std::function<Tensor()> {
                       const auto w = plmmd_weights(one_hot(fx.labels, kOutputDim), fx.target_probs);
                       return [&fx, w] {
                         return plmmd(fx.net.forward(fx.xs), fx.net.forward(fx.xt), w,
                                      KernelConfig::ladder(1.0));
                       };
                     },
                     false, true});
  entries.push_back({"mcc", [](const Fixture& fx) -> std::function<Tensor()> {
                       return [&fx] { return mcc_loss(fx.net.forward(fx.xt), 2.5); };
                     }});
  entries.push_back({"im", [](const Fixture& fx) -> std::function<Tensor()> {
                       return [&fx] { return im_loss(softmax(fx.net.forward(fx.xt))); };
                     }});
  return entries;
}

}  // namespace

std::vector<GradcheckRow> run_gradcheck_suite(const GradcheckSuiteOptions& options) {
  std::vector<GradcheckRow> rows;
  for (const auto& entry : suite_entries()) {
    GradcheckRow row{entry.name, 0.0, 0, true};
    const bool corrupt = options.corrupt && *options.corrupt == entry.name;
    for (std::uint64_t seed = 0; seed < options.seeds; ++seed) {
      Fixture fx(seed);
      std::vector<Tensor> leaves(fx.net.parameters().begin(), fx.net.parameters().end());
      if (entry.skips_output_bias) leaves.pop_back();
      if (entry.includes_discriminator) {
        leaves.insert(leaves.end(), fx.discriminator.parameters().begin(),
                      fx.discriminator.parameters().end());
      }
      const std::function<Tensor()> loss = entry.make(fx);
      std::function<Tensor()> checked = loss;
      if (corrupt) {
        checked = [loss] { return grad_reverse(loss(), 1.0); };
      }
      const auto report = gradcheck_leaves(checked, leaves, options.step);
      if (report.max_relative_error > row.worst_error) {
        row.worst_error = report.max_relative_error;
        row.worst_seed = seed;
      }
    }
    row.passed = row.worst_error < options.tolerance;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace uda
