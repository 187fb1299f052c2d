#include "uda/kernel_mmd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uda/errors.hpp"
#include "uda/ops.hpp"

namespace uda {

namespace {

void require_features(const char* op, const Tensor& x, const Tensor& y) {
  if (x.rank() != 2 || y.rank() != 2) {
    throw ShapeError(std::string(op) + ": samples must be matrices");
  }
  if (x.cols() != y.cols()) {
    throw ShapeError(std::string(op) + ": feature dimensions " + std::to_string(x.cols()) +
                     " and " + std::to_string(y.cols()) + " differ");
  }
}

}  // namespace

void KernelConfig::validate() const {
  if (bandwidths.empty()) {
    throw ParameterError("kernel config needs at least one bandwidth");
  }
  for (double s : bandwidths) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ParameterError("kernel bandwidths must be positive and finite");
    }
  }
}

KernelConfig KernelConfig::single(double sigma) {
  KernelConfig cfg{{sigma}};
  cfg.validate();
  return cfg;
}

KernelConfig KernelConfig::ladder(double sigma, std::size_t count, double base) {
  if (count == 0 || !(base > 0.0)) {
    throw ParameterError("kernel ladder needs count >= 1 and a positive base");
  }
  KernelConfig cfg;
  const auto half = static_cast<int>(count / 2);
  for (std::size_t k = 0; k < count; ++k) {
    cfg.bandwidths.push_back(sigma * std::pow(base, static_cast<int>(k) - half));
  }
  cfg.validate();
  return cfg;
}

double median_heuristic(const Tensor& x, const Tensor& y) {
  require_features("median_heuristic", x, y);
  const std::size_t n = x.rows() + y.rows();
  if (n < 2) {
    throw ParameterError("median_heuristic needs at least two points");
  }
  const std::size_t d = x.cols();
  auto point = [&](std::size_t i) {
    return i < x.rows() ? x.values().data() + i * d : y.values().data() + (i - x.rows()) * d;
  };
  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* a = point(i);
      const double* b = point(j);
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        acc += (a[c] - b[c]) * (a[c] - b[c]);
      }
      if (acc > 0.0) {
        dists.push_back(acc);
      }
    }
  }
  if (dists.empty()) {
    return 1.0;
  }
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return std::sqrt(median / 2.0);
}

KernelConfig batch_kernel(const Tensor& x, const Tensor& y, std::size_t count, double base) {
  return KernelConfig::ladder(median_heuristic(x, y), count, base);
}

Tensor gaussian_gram(const Tensor& x, const Tensor& y, const KernelConfig& cfg) {
  cfg.validate();
  require_features("gaussian_gram", x, y);
  const Tensor dist = squared_distances(x, y);
  Tensor gram = exp(scale(dist, -1.0 / (2.0 * cfg.bandwidths[0] * cfg.bandwidths[0])));
  for (std::size_t k = 1; k < cfg.bandwidths.size(); ++k) {
    const double s = cfg.bandwidths[k];
    gram = add(gram, exp(scale(dist, -1.0 / (2.0 * s * s))));
  }
  return gram;
}

Tensor mmd2_biased(const Tensor& x, const Tensor& y, const KernelConfig& cfg) {
  require_features("mmd2_biased", x, y);
  if (x.rows() == 0 || y.rows() == 0) {
    throw ParameterError("mmd2_biased: both samples must be non-empty");
  }
  const Tensor kxx = mean(gaussian_gram(x, x, cfg));
  const Tensor kxy = mean(gaussian_gram(x, y, cfg));
  const Tensor kyy = mean(gaussian_gram(y, y, cfg));
  return add(sub(kxx, scale(kxy, 2.0)), kyy);
}

WeightTriple plmmd_weights(const Tensor& source_onehot, const Tensor& target_probs) {
  if (source_onehot.rank() != 2 || target_probs.rank() != 2) {
    throw ShapeError("plmmd_weights: label inputs must be matrices");
  }
  const std::size_t ns = source_onehot.rows();
  const std::size_t nt = target_probs.rows();
  const std::size_t k = source_onehot.cols();
  if (target_probs.cols() != k) {
    throw ShapeError("plmmd_weights: class counts " + std::to_string(k) + " and " +
                     std::to_string(target_probs.cols()) + " differ");
  }
  const auto s = source_onehot.values();
  const auto t = target_probs.values();
  for (double v : s) {
    if (v < 0.0) {
      throw DomainError("plmmd_weights: negative source label entry");
    }
  }
  for (std::size_t i = 0; i < nt; ++i) {
    double row = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (t[i * k + c] < 0.0) {
        throw DomainError("plmmd_weights: negative target probability");
      }
      row += t[i * k + c];
    }
    if (std::abs(row - 1.0) > 1e-6) {
      throw DomainError("plmmd_weights: target row " + std::to_string(i) +
                        " is not a probability vector");
    }
  }

  std::vector<double> wss(ns * ns, 0.0);
  std::vector<double> wst(ns * nt, 0.0);
  std::vector<double> wtt(nt * nt, 0.0);
  std::vector<double> a(ns);
  std::vector<double> b(nt);
  std::size_t common = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double source_mass = 0.0;
    double target_mass = 0.0;
    for (std::size_t i = 0; i < ns; ++i) source_mass += s[i * k + c];
    for (std::size_t j = 0; j < nt; ++j) target_mass += t[j * k + c];
    if (!(source_mass > 0.0) || !(target_mass > kCommonClassMass)) {
      continue;
    }
    ++common;
    for (std::size_t i = 0; i < ns; ++i) a[i] = s[i * k + c] / source_mass;
    for (std::size_t j = 0; j < nt; ++j) b[j] = t[j * k + c] / target_mass;
    for (std::size_t i = 0; i < ns; ++i) {
      for (std::size_t j = 0; j < ns; ++j) wss[i * ns + j] += a[i] * a[j];
      for (std::size_t j = 0; j < nt; ++j) wst[i * nt + j] += a[i] * b[j];
    }
    for (std::size_t i = 0; i < nt; ++i) {
      for (std::size_t j = 0; j < nt; ++j) wtt[i * nt + j] += b[i] * b[j];
    }
  }
  if (common > 0) {
    const double inv = 1.0 / static_cast<double>(common);
    for (auto* w : {&wss, &wst, &wtt}) {
      for (double& v : *w) v *= inv;
    }
  }
  return WeightTriple{Tensor::matrix(ns, ns, std::move(wss)), Tensor::matrix(ns, nt, std::move(wst)),
                      Tensor::matrix(nt, nt, std::move(wtt)), common};
}

Tensor plmmd(const Tensor& x, const Tensor& y, const WeightTriple& w, const KernelConfig& cfg) {
  require_features("plmmd", x, y);
  const std::size_t ns = x.rows();
  const std::size_t nt = y.rows();
  if (w.source_source.shape() != Shape{ns, ns} || w.source_target.shape() != Shape{ns, nt} ||
      w.target_target.shape() != Shape{nt, nt}) {
    throw ShapeError("plmmd: weight shapes do not match sample counts");
  }
  const Tensor ss = sum(mul(w.source_source, gaussian_gram(x, x, cfg)));
  const Tensor st = sum(mul(w.source_target, gaussian_gram(x, y, cfg)));
  const Tensor tt = sum(mul(w.target_target, gaussian_gram(y, y, cfg)));
  return add(sub(ss, scale(st, 2.0)), tt);
}

}  // namespace uda
