#include "uda/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "uda/errors.hpp"

namespace uda {

namespace {

double finite_scalar(const Tensor& t) {
  if (t.size() != 1) {
    throw ShapeError("gradcheck: function must return a scalar");
  }
  const double v = t.item();
  if (!std::isfinite(v)) {
    throw NumericError("gradcheck: non-finite function value");
  }
  return v;
}

void record(GradcheckReport& report, std::size_t tensor, std::size_t index, double analytic,
            double numeric) {
  const double err = gradcheck_relative_error(analytic, numeric);
  if (!std::isfinite(err)) {
    throw NumericError("gradcheck: non-finite gradient");
  }
  if (err > report.max_relative_error) {
    report.max_relative_error = err;
    report.worst_tensor = tensor;
    report.worst_index = index;
    report.analytic = analytic;
    report.numeric = numeric;
  }
}

}  // namespace

double gradcheck_relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-12, std::abs(analytic) + std::abs(numeric));
}

GradcheckReport gradcheck(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                          double step) {
  if (!(step > 0.0)) {
    throw ParameterError("gradcheck: step must be positive");
  }
  std::vector<double> point(x.values().begin(), x.values().end());
  Tensor leaf = Tensor::from(x.shape(), point, true);
  Tensor out = f(leaf);
  finite_scalar(out);
  out.backward();
  std::vector<double> analytic = leaf.has_grad()
                                     ? std::vector<double>(leaf.grad().begin(), leaf.grad().end())
                                     : std::vector<double>(point.size(), 0.0);

  GradcheckReport report;
  for (std::size_t i = 0; i < point.size(); ++i) {
    auto probe = point;
    probe[i] = point[i] + step;
    const double plus = finite_scalar(f(Tensor::from(x.shape(), probe)));
    probe[i] = point[i] - step;
    const double minus = finite_scalar(f(Tensor::from(x.shape(), probe)));
    record(report, 0, i, analytic[i], (plus - minus) / (2.0 * step));
  }
  return report;
}

GradcheckReport gradcheck_leaves(const std::function<Tensor()>& loss, std::span<Tensor> leaves,
                                 double step) {
  if (!(step > 0.0)) {
    throw ParameterError("gradcheck: step must be positive");
  }
  for (auto& leaf : leaves) {
    if (!leaf.is_leaf() || !leaf.requires_grad()) {
      throw ParameterError("gradcheck_leaves: every tensor must be a leaf requiring grad");
    }
    leaf.zero_grad();
  }
  Tensor out = loss();
  finite_scalar(out);
  out.backward();

  GradcheckReport report;
  for (std::size_t t = 0; t < leaves.size(); ++t) {
    Tensor& leaf = leaves[t];
    std::vector<double> analytic = leaf.has_grad()
                                       ? std::vector<double>(leaf.grad().begin(), leaf.grad().end())
                                       : std::vector<double>(leaf.size(), 0.0);
    auto values = leaf.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double plus = finite_scalar(loss());
      values[i] = saved - step;
      const double minus = finite_scalar(loss());
      values[i] = saved;
      record(report, t, i, analytic[i], (plus - minus) / (2.0 * step));
    }
  }
  for (auto& leaf : leaves) {
    leaf.zero_grad();
  }
  return report;
}

}  // namespace uda
