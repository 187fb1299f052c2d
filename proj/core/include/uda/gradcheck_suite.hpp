#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace uda {

struct GradcheckRow {
  std::string loss;  // clc, dis, mmd, plmmd, mcc, im
  double worst_error = 0.0;
  std::uint64_t worst_seed = 0;
  bool passed = false;
};

struct GradcheckSuiteOptions {
  std::size_t seeds = 20;
  double step = 1e-5;
  double tolerance = 1e-4;
  // Negative control: flips the gradient sign of the named loss so its row
  // must fail.
  std::optional<std::string> corrupt;
};

/// Every loss composed with a seeded two-layer MLP, checked against central
/// finite differences over the MLP parameters (and the discriminator's for
/// the adversarial loss). One row per loss, worst error over all seeds.
std::vector<GradcheckRow> run_gradcheck_suite(const GradcheckSuiteOptions& options = {});

}  // namespace uda
