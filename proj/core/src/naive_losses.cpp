#include "uda/naive_losses.hpp"

#include <algorithm>
#include <cmath>

namespace uda::naive {

namespace {

double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return s;
}

double plogp(double p) {
  return p * std::log(std::max(1e-12, p));
}

}  // namespace

double median_bandwidth(const Matrix& x, const Matrix& y) {
  Matrix pooled = x;
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::vector<double> d;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t j = i + 1; j < pooled.size(); ++j) {
      const double v = sqdist(pooled[i], pooled[j]);
      if (v > 0.0) d.push_back(v);
    }
  }
  if (d.empty()) return 1.0;
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size();
  const double median = m % 2 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
  return std::sqrt(median / 2.0);
}

std::vector<double> bandwidth_ladder(double sigma, std::size_t count, double base) {
  std::vector<double> out;
  const int half = static_cast<int>(count / 2);
  for (int k = -half; k < static_cast<int>(count) - half; ++k) {
    out.push_back(sigma * std::pow(base, k));
  }
  return out;
}

double kernel(const std::vector<double>& a, const std::vector<double>& b,
              const std::vector<double>& bandwidths) {
  const double d = sqdist(a, b);
  double k = 0.0;
  for (double s : bandwidths) k += std::exp(-d / (2.0 * s * s));
  return k;
}

double mmd2(const Matrix& x, const Matrix& y, const std::vector<double>& bandwidths) {
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  double xx = 0.0, xy = 0.0, yy = 0.0;
  for (const auto& a : x)
    for (const auto& b : x) xx += kernel(a, b, bandwidths);
  for (const auto& a : x)
    for (const auto& b : y) xy += kernel(a, b, bandwidths);
  for (const auto& a : y)
    for (const auto& b : y) yy += kernel(a, b, bandwidths);
  return xx / (n * n) - 2.0 * xy / (n * m) + yy / (m * m);
}

double plmmd(const Matrix& x, const std::vector<int>& labels, const Matrix& y,
             const Matrix& target_probs, const std::vector<double>& bandwidths) {
  const std::size_t k = target_probs.empty() ? 0 : target_probs[0].size();
  std::vector<std::size_t> common;
  std::vector<double> source_count(k, 0.0), target_mass(k, 0.0);
  for (int l : labels) source_count[static_cast<std::size_t>(l)] += 1.0;
  for (const auto& row : target_probs)
    for (std::size_t c = 0; c < k; ++c) target_mass[c] += row[c];
  for (std::size_t c = 0; c < k; ++c) {
    if (source_count[c] > 0.0 && target_mass[c] > 1e-6) common.push_back(c);
  }
  if (common.empty()) return 0.0;
  const double nc = static_cast<double>(common.size());

  auto a = [&](std::size_t c, std::size_t i) {
    return labels[i] == static_cast<int>(c) ? 1.0 / source_count[c] : 0.0;
  };
  auto b = [&](std::size_t c, std::size_t j) { return target_probs[j][c] / target_mass[c]; };

  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      double w = 0.0;
      for (auto c : common) w += a(c, i) * a(c, j);
      total += w / nc * kernel(x[i], x[j], bandwidths);
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      double w = 0.0;
      for (auto c : common) w += a(c, i) * b(c, j);
      total -= 2.0 * w / nc * kernel(x[i], y[j], bandwidths);
    }
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      double w = 0.0;
      for (auto c : common) w += b(c, i) * b(c, j);
      total += w / nc * kernel(y[i], y[j], bandwidths);
    }
  }
  return total;
}

Matrix softmax(const Matrix& logits, double temperature) {
  Matrix out = logits;
  for (auto& row : out) {
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) {
      v = std::exp((v - mx) / temperature);
      z += v;
    }
    for (double& v : row) v /= z;
  }
  return out;
}

double mcc(const Matrix& logits, double temperature) {
  const Matrix p = softmax(logits, temperature);
  const std::size_t n = p.size();
  const std::size_t k = p[0].size();
  std::vector<double> w(n);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double h = 0.0;
    for (double v : p[i]) h -= plogp(v);
    w[i] = 1.0 + std::exp(-h);
    wsum += w[i];
  }
  for (double& v : w) v = static_cast<double>(n) * v / wsum;

  double loss = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> row(k, 0.0);
    double row_sum = 0.0;
    for (std::size_t jj = 0; jj < k; ++jj) {
      for (std::size_t i = 0; i < n; ++i) row[jj] += p[i][j] * w[i] * p[i][jj];
      row_sum += row[jj];
    }
    for (std::size_t jj = 0; jj < k; ++jj) {
      if (jj != j) loss += std::abs(row[jj]) / std::max(1e-12, row_sum);
    }
  }
  return loss / static_cast<double>(k);
}

double im(const Matrix& probs) {
  const std::size_t n = probs.size();
  const std::size_t k = probs[0].size();
  std::vector<double> marginal(k, 0.0);
  double conditional = 0.0;
  for (const auto& row : probs) {
    for (std::size_t c = 0; c < k; ++c) {
      marginal[c] += row[c] / static_cast<double>(n);
      conditional -= plogp(row[c]) / static_cast<double>(n);
    }
  }
  double marginal_entropy = 0.0;
  for (double v : marginal) marginal_entropy -= plogp(v);
  return -(marginal_entropy - conditional);
}

double disc(const std::vector<double>& d_source, const std::vector<double>& d_target) {
  double s = 0.0, t = 0.0;
  for (double v : d_source) s += std::log(std::max(1e-7, v));
  for (double v : d_target) t += std::log(std::max(1e-7, 1.0 - v));
  return -s / static_cast<double>(d_source.size()) - t / static_cast<double>(d_target.size());
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto& z = logits[i];
    const double mx = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - mx);
    total -= z[static_cast<std::size_t>(labels[i])] - mx - std::log(lse);
  }
  return total / static_cast<double>(logits.size());
}

Report all_losses(const Matrix& source_features, const std::vector<int>& source_labels,
                  const Matrix& target_features, const Matrix& target_logits,
                  const std::optional<std::vector<double>>& disc_source,
                  const std::optional<std::vector<double>>& disc_target, double temperature,
                  std::size_t kernel_count, double kernel_base) {
  const auto bandwidths = bandwidth_ladder(median_bandwidth(source_features, target_features),
                                           kernel_count, kernel_base);
  const Matrix probs = softmax(target_logits, 1.0);
  Report r;
  r.mmd = mmd2(source_features, target_features, bandwidths);
  r.plmmd = plmmd(source_features, source_labels, target_features, probs, bandwidths);
  r.mcc = mcc(target_logits, temperature);
  r.im = im(probs);
  if (disc_source && disc_target) {
    r.dis = disc(*disc_source, *disc_target);
  }
  return r;
}

}  // namespace uda::naive
