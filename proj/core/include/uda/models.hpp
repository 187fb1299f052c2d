#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uda/tensor.hpp"

namespace uda {

enum class FinalActivation { none, sigmoid };

std::string_view to_string(FinalActivation activation);
FinalActivation final_activation_from_string(std::string_view name);

/// Fully connected chain layer_widths[0] -> ... -> layer_widths.back(), ReLU
/// between layers and `final_activation` after the last one.
struct MLPSpec {
  std::vector<std::size_t> layer_widths;
  FinalActivation final_activation = FinalActivation::none;

  void validate() const;
  std::size_t input_dim() const { return layer_widths.front(); }
  std::size_t output_dim() const { return layer_widths.back(); }
  std::size_t layer_count() const { return layer_widths.size() - 1; }

  bool operator==(const MLPSpec&) const = default;
};

/// Parameters are stored per layer as weight [in x out] then bias [1 x out].
class Model {
 public:
  Model(MLPSpec spec, std::uint64_t seed, std::vector<Tensor> parameters);

  const MLPSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  std::span<Tensor> parameters() { return parameters_; }
  std::span<const Tensor> parameters() const { return parameters_; }
  std::string parameter_name(std::size_t index) const;

  Tensor forward(const Tensor& x) const;

  // Independent copy of the parameters (same spec and seed).
  Model clone() const;
  void zero_grad();

 private:
  MLPSpec spec_;
  std::uint64_t seed_;
  std::vector<Tensor> parameters_;
};

// Weights ~ U(-a, a), a = sqrt(6 / (fan_in + fan_out)), drawn layer by layer
// from Rng(seed); biases zero.
Model init_model(const MLPSpec& spec, std::uint64_t seed);

inline Tensor forward(const Model& model, const Tensor& x) { return model.forward(x); }

/// Named models plus auxiliary named arrays (normalization statistics, ...).
///
/// On-disk format, whitespace separated, one record per line:
///
///   uda-checkpoint 1
///   model <name> seed <u64> final <none|sigmoid> widths <count> <w0> ...
///   tensor <rows> <cols>
///   <values...>                       (one line, shortest round-trip decimals)
///   array <name> <length>
///   <values...>
///   end
///
/// Every model line is followed by its tensors in parameter order. Reals are
/// written in the shortest form that parses back to the same double, so a
/// save/load round trip is bit-exact.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  std::vector<std::pair<std::string, Model>> models;
  std::map<std::string, std::vector<double>> arrays;

  const Model& model(std::string_view name) const;
  bool has_model(std::string_view name) const;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace uda
