#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uda/ops.hpp"
#include "uda/random.hpp"
#include "uda/tensor.hpp"

namespace uda::testing {

inline Tensor random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double spread = 1.0,
                            bool requires_grad = false) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = spread * rng.normal();
  return Tensor::matrix(rows, cols, std::move(v), requires_grad);
}

inline Tensor random_probs(Rng& rng, std::size_t rows, std::size_t cols, double spread = 1.5) {
  return softmax(random_matrix(rng, rows, cols, spread));
}

inline std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t classes) {
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng.below(classes));
  return labels;
}

inline std::vector<std::vector<double>> to_rows(const Tensor& t) {
  std::vector<std::vector<double>> rows(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) rows[i][j] = t.at(i, j);
  }
  return rows;
}

inline std::vector<double> values_of(const Tensor& t) {
  return {t.values().begin(), t.values().end()};
}

inline std::vector<double> grad_of(const Tensor& t) { return {t.grad().begin(), t.grad().end()}; }

// Fresh empty directory under the system temp dir, unique per name.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("uda-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace uda::testing
