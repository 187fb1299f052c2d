#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uda/tensor.hpp"

namespace uda {

enum class DomainTag { source, target };

std::string_view to_string(DomainTag tag);

/// Feature matrix with optional class labels. Source datasets are always
/// labelled; target labels, when present, only feed evaluation.
struct DomainDataset {
  Tensor features = Tensor::zeros({0, 0});  // [n x d], constant
  std::optional<std::vector<int>> labels;
  DomainTag domain = DomainTag::source;
  std::size_t class_count = 0;
  std::vector<std::string> feature_names;  // empty means x0, x1, ...

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  bool labelled() const { return labels.has_value(); }

  // Throws when labels are out of range, mis-sized, or missing on a source set.
  void validate() const;

  Tensor gather(std::span<const std::size_t> rows) const;
  std::vector<int> gather_labels(std::span<const std::size_t> rows) const;
};

/// Features of a dataset with the labels stripped. Training consumes target
/// data only through this type.
class UnlabeledView {
 public:
  explicit UnlabeledView(const DomainDataset& ds) : features_(ds.features) {}

  std::size_t size() const { return features_.rows(); }
  std::size_t dim() const { return features_.cols(); }
  const Tensor& features() const { return features_; }
  Tensor gather(std::span<const std::size_t> rows) const;

 private:
  Tensor features_;
};

enum class Generator { two_moons, gaussian_blobs };

std::string_view to_string(Generator generator);
Generator generator_from_string(std::string_view name);

struct SyntheticSpec {
  Generator generator = Generator::two_moons;
  std::size_t n = 0;
  double noise = 0.0;
  double rotation_degrees = 0.0;     // applied to the first two coordinates
  std::vector<double> translation;   // empty means no translation
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> centers;  // gaussian_blobs only
  DomainTag domain = DomainTag::source;

  void validate() const;
};

/// Two interleaved half circles: class 0 on (cos t, sin t), class 1 on
/// (1 - cos t, 0.5 - sin t), t evenly spaced on [0, pi]. Class 0 gets
/// ceil(n/2) points. Gaussian noise, then rotation about the origin, then
/// translation.
DomainDataset gen_two_moons(const SyntheticSpec& spec);

// Point i belongs to class i mod K and sits at centers[class] plus isotropic
// noise of standard deviation spec.noise, then rotation and translation.
DomainDataset gen_gaussian_blobs(const SyntheticSpec& spec, const Tensor& centers);

// Dispatches on spec.generator (blobs read their centers from spec.centers).
DomainDataset generate(const SyntheticSpec& spec);

struct TableSchema {
  std::vector<std::string> feature_columns;  // empty: every non-label column
  std::optional<std::string> label_column;
  char delimiter = ',';
  std::optional<std::size_t> class_count;    // default: max label + 1
};

/// Delimited text with one header row. Ragged rows, non-numeric cells and
/// out-of-range labels raise ParseError naming the 1-based file line. A
/// header-only file yields an empty dataset.
DomainDataset load_table(const std::filesystem::path& path, const TableSchema& schema,
                         DomainTag domain = DomainTag::source);

// Writes features (and a trailing `label` column when labelled) with
// round-trip-exact decimals.
void save_table(const DomainDataset& ds, const std::filesystem::path& path, char delimiter = ',');

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
};

inline constexpr double kStdFloor = 1e-12;

/// Per-column (x - mean) / max(eps, std) with population std. Statistics are
/// computed from `ds` unless supplied (target data reuses source stats).
std::pair<DomainDataset, NormStats> zscore_normalize(const DomainDataset& ds,
                                                     const std::optional<NormStats>& stats = {});

/// Seeded permutation of 0..n-1 split into consecutive batches; the last
/// batch may be short. Distinct per epoch, identical per (seed, epoch).
std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size,
                                                 std::uint64_t seed, std::uint64_t epoch);

struct StepIndices {
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
};

/// One epoch of paired batches: ceil(max(n_s, n_t) / batch_size) steps, each
/// domain shuffled on its own stream; the shorter domain cycles through its
/// batches again.
std::vector<StepIndices> paired_batches(std::size_t n_source, std::size_t n_target,
                                        std::size_t batch_size, std::uint64_t seed,
                                        std::uint64_t epoch);

}  // namespace uda
