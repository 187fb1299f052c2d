#pragma once

#include <cstddef>
#include <optional>
#include <vector>

// Reference implementations written as plain loops over nested vectors.
// They share no code with the tensor library and exist to cross-check it.
namespace uda::naive {

using Matrix = std::vector<std::vector<double>>;

double median_bandwidth(const Matrix& x, const Matrix& y);
std::vector<double> bandwidth_ladder(double sigma, std::size_t count, double base);

double kernel(const std::vector<double>& a, const std::vector<double>& b,
              const std::vector<double>& bandwidths);

double mmd2(const Matrix& x, const Matrix& y, const std::vector<double>& bandwidths);

// Weighted sum with w_ij = (1/|C|) sum_c a_c[i] b_c[j], computed entry by entry.
double plmmd(const Matrix& x, const std::vector<int>& labels, const Matrix& y,
             const Matrix& target_probs, const std::vector<double>& bandwidths);

Matrix softmax(const Matrix& logits, double temperature);
double mcc(const Matrix& logits, double temperature);
double im(const Matrix& probs);
double disc(const std::vector<double>& d_source, const std::vector<double>& d_target);
double cross_entropy(const Matrix& logits, const std::vector<int>& labels);

struct Report {
  double mmd = 0.0;
  double plmmd = 0.0;
  double mcc = 0.0;
  double im = 0.0;
  std::optional<double> dis;
};

Report all_losses(const Matrix& source_features, const std::vector<int>& source_labels,
                  const Matrix& target_features, const Matrix& target_logits,
                  const std::optional<std::vector<double>>& disc_source,
                  const std::optional<std::vector<double>>& disc_target, double temperature,
                  std::size_t kernel_count, double kernel_base);

}  // namespace uda::naive
