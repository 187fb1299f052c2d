#include "uda/adversarial.hpp"

#include <array>
#include <cmath>
#include <string>

#include "uda/errors.hpp"
#include "uda/ops.hpp"
#include "uda/random.hpp"

namespace uda {

std::string_view to_string(ConditioningMode mode) {
  switch (mode) {
    case ConditioningMode::exact_multilinear:
      return "exact";
    case ConditioningMode::randomized_multilinear:
      return "randomized";
    case ConditioningMode::concatenation:
      return "concat";
  }
  return "exact";
}

ConditioningMode conditioning_mode_from_string(std::string_view name) {
  if (name == "exact") return ConditioningMode::exact_multilinear;
  if (name == "randomized") return ConditioningMode::randomized_multilinear;
  if (name == "concat") return ConditioningMode::concatenation;
  throw ParameterError("unknown conditioning mode '" + std::string(name) + "'");
}

ConditioningMap::ConditioningMap(ConditioningMode mode, std::size_t feature_dim,
                                 std::size_t classes, std::size_t output_dim)
    : mode_(mode), feature_dim_(feature_dim), classes_(classes), output_dim_(output_dim) {
  if (feature_dim == 0 || classes == 0 || output_dim == 0) {
    throw ParameterError("conditioning map dimensions must be positive");
  }
}

ConditioningMap ConditioningMap::exact(std::size_t feature_dim, std::size_t classes) {
  return ConditioningMap(ConditioningMode::exact_multilinear, feature_dim, classes,
                         feature_dim * classes);
}

ConditioningMap ConditioningMap::randomized(std::size_t feature_dim, std::size_t classes,
                                            std::size_t random_dim, std::uint64_t seed) {
  ConditioningMap map(ConditioningMode::randomized_multilinear, feature_dim, classes, random_dim);
  Rng rng(seed);
  std::vector<double> rf(feature_dim * random_dim);
  for (double& v : rf) v = rng.normal();
  std::vector<double> rg(classes * random_dim);
  for (double& v : rg) v = rng.normal();
  map.r_f_ = Tensor::matrix(feature_dim, random_dim, std::move(rf));
  map.r_g_ = Tensor::matrix(classes, random_dim, std::move(rg));
  return map;
}

ConditioningMap ConditioningMap::concatenation(std::size_t feature_dim, std::size_t classes) {
  return ConditioningMap(ConditioningMode::concatenation, feature_dim, classes,
                         feature_dim + classes);
}

ConditioningMap ConditioningMap::select(std::size_t feature_dim, std::size_t classes,
                                        const ConditioningOptions& options, std::uint64_t seed) {
  ConditioningMode mode = feature_dim * classes <= options.exact_limit
                              ? ConditioningMode::exact_multilinear
                              : ConditioningMode::randomized_multilinear;
  if (options.mode) {
    mode = *options.mode;
  }
  switch (mode) {
    case ConditioningMode::exact_multilinear:
      return exact(feature_dim, classes);
    case ConditioningMode::randomized_multilinear:
      return randomized(feature_dim, classes, options.random_dim, seed);
    case ConditioningMode::concatenation:
      return concatenation(feature_dim, classes);
  }
  return exact(feature_dim, classes);
}

Tensor ConditioningMap::apply(const Tensor& f, const Tensor& g) const {
  if (f.rank() != 2 || g.rank() != 2 || f.cols() != feature_dim_ || g.cols() != classes_) {
    throw ShapeError("conditioning map expects [n x " + std::to_string(feature_dim_) + "] and [n x " +
                     std::to_string(classes_) + "] inputs, got " + shape_string(f.shape()) +
                     " and " + shape_string(g.shape()));
  }
  switch (mode_) {
    case ConditioningMode::exact_multilinear:
      return multilinear_map(f, g);
    case ConditioningMode::randomized_multilinear:
      return randomized_multilinear(f, g, *this);
    case ConditioningMode::concatenation: {
      const std::array<Tensor, 2> parts{f, g};
      return concat_cols(parts);
    }
  }
  return multilinear_map(f, g);
}

Tensor multilinear_map(const Tensor& f, const Tensor& g) {
  return outer_rows(f, g);
}

Tensor randomized_multilinear(const Tensor& f, const Tensor& g, const ConditioningMap& map) {
  if (map.mode() != ConditioningMode::randomized_multilinear) {
    throw ParameterError("randomized_multilinear needs a randomized conditioning map");
  }
  const Tensor pf = matmul(f, map.feature_projection());
  const Tensor pg = matmul(g, map.class_projection());
  return scale(mul(pf, pg), 1.0 / std::sqrt(static_cast<double>(map.output_dim())));
}

Tensor domain_disc_loss(const Tensor& d_source, const Tensor& d_target) {
  for (const Tensor* t : {&d_source, &d_target}) {
    if (t->size() == 0) {
      throw ParameterError("domain_disc_loss: empty discriminator output");
    }
    for (double v : t->values()) {
      if (v < 0.0 || v > 1.0) {
        throw DomainError("domain_disc_loss: discriminator output " + std::to_string(v) +
                          " outside [0, 1]");
      }
    }
  }
  const Tensor source_term = mean(clamped_log(d_source, kDiscriminatorEps));
  const Tensor target_term = mean(clamped_log(add_scalar(negate(d_target), 1.0), kDiscriminatorEps));
  return negate(add(source_term, target_term));
}

Tensor cdan_adversarial_loss(const Tensor& f_source, const Tensor& g_source,
                             const Tensor& f_target, const Tensor& g_target,
                             const Model& discriminator, const ConditioningMap& map,
                             double grl_scale) {
  if (discriminator.spec().input_dim() != map.output_dim()) {
    throw ShapeError("discriminator input width " +
                     std::to_string(discriminator.spec().input_dim()) +
                     " does not match conditioning output " + std::to_string(map.output_dim()));
  }
  const Tensor h_source = map.apply(grad_reverse(f_source, grl_scale), g_source.detach());
  const Tensor h_target = map.apply(grad_reverse(f_target, grl_scale), g_target.detach());
  return domain_disc_loss(discriminator.forward(h_source), discriminator.forward(h_target));
}

}  // namespace uda
