#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "uda/models.hpp"
#include "uda/tensor.hpp"

namespace uda {

enum class ConditioningMode { exact_multilinear, randomized_multilinear, concatenation };

std::string_view to_string(ConditioningMode mode);
ConditioningMode conditioning_mode_from_string(std::string_view name);

struct ConditioningOptions {
  // Unset: exact when d_f * K <= exact_limit, randomized otherwise.
  std::optional<ConditioningMode> mode;
  std::size_t exact_limit = 4096;
  std::size_t random_dim = 1024;
};

/// The joint variable fed to the domain discriminator, built from features f
/// and class predictions g.
class ConditioningMap {
 public:
  static ConditioningMap exact(std::size_t feature_dim, std::size_t classes);
  // R_f [d_f x d_r] then R_g [K x d_r], standard normal entries from Rng(seed).
  static ConditioningMap randomized(std::size_t feature_dim, std::size_t classes,
                                    std::size_t random_dim, std::uint64_t seed);
  static ConditioningMap concatenation(std::size_t feature_dim, std::size_t classes);
  static ConditioningMap select(std::size_t feature_dim, std::size_t classes,
                                const ConditioningOptions& options, std::uint64_t seed);

  ConditioningMode mode() const { return mode_; }
  std::size_t output_dim() const { return output_dim_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t classes() const { return classes_; }
  const Tensor& feature_projection() const { return r_f_; }
  const Tensor& class_projection() const { return r_g_; }

  Tensor apply(const Tensor& f, const Tensor& g) const;

 private:
  ConditioningMap(ConditioningMode mode, std::size_t feature_dim, std::size_t classes,
                  std::size_t output_dim);

  ConditioningMode mode_;
  std::size_t feature_dim_;
  std::size_t classes_;
  std::size_t output_dim_;
  Tensor r_f_;
  Tensor r_g_;
};

// Row i = flatten(f_i g_i^T) in row-major order: entry a * K + c is f_ia g_ic.
Tensor multilinear_map(const Tensor& f, const Tensor& g);

// Row i = (R_f^T f_i) .* (R_g^T g_i) / sqrt(d_r). Requires a randomized map.
Tensor randomized_multilinear(const Tensor& f, const Tensor& g, const ConditioningMap& map);

// Discriminator output clamp inside the logs.
inline constexpr double kDiscriminatorEps = 1e-7;

/// -mean log d_source - mean log(1 - d_target), with source labelled 1 and
/// target labelled 0. Inputs are sigmoid outputs in [0, 1].
Tensor domain_disc_loss(const Tensor& d_source, const Tensor& d_target);

/// Conditional adversarial loss for one batch pair. Predictions g are
/// detached; features pass through grad_reverse(grl_scale) before the
/// conditioning map. One backward pass therefore descends the discriminator
/// on the returned loss while the feature extractor receives -grl_scale times
/// its gradient.
Tensor cdan_adversarial_loss(const Tensor& f_source, const Tensor& g_source,
                             const Tensor& f_target, const Tensor& g_target,
                             const Model& discriminator, const ConditioningMap& map,
                             double grl_scale);

}  // namespace uda
