#include "uda/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uda/errors.hpp"

namespace uda {

namespace {

using detail::grad_buffer;
using detail::make_result;

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

void require_matrix(const char* op, const Tensor& a) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

// Length of a vector-like operand: rank 1, or a matrix with one row or column.
std::size_t vector_length(const char* op, const Tensor& v) {
  if (v.rank() == 1) {
    return v.shape()[0];
  }
  if (v.rank() == 2 && (v.shape()[0] == 1 || v.shape()[1] == 1)) {
    return v.size();
  }
  throw ShapeError(std::string(op) + ": expected a vector, got " + shape_string(v.shape()));
}

// Shared driver for binary elementwise ops with scalar broadcast. The
// derivative functors receive (a_i, b_i, out_i) and return the partials.
template <typename Fwd, typename DA, typename DB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, DA da, DB db) {
  const bool a_scalar = a.size() == 1 && b.size() != 1;
  const bool b_scalar = b.size() == 1 && a.size() != 1;
  if (!a_scalar && !b_scalar && !(a.size() == 1 && b.size() == 1)) {
    require_same_shape(op, a, b);
  }
  const Shape shape = a_scalar ? b.shape() : a.shape();
  const std::size_t n = shape_size(shape);
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = fwd(av[a_scalar ? 0 : i], bv[b_scalar ? 0 : i]);
  }
  auto result_values = out;
  return make_result(op, shape, std::move(out), {a, b},
                     [a, b, a_scalar, b_scalar, da, db, y = std::move(result_values)](
                         std::span<const double> g) {
                       const auto av = a.values();
                       const auto bv = b.values();
                       double* ga = grad_buffer(a);
                       double* gb = grad_buffer(b);
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const double ai = av[a_scalar ? 0 : i];
                         const double bi = bv[b_scalar ? 0 : i];
                         if (ga) ga[a_scalar ? 0 : i] += g[i] * da(ai, bi, y[i]);
                         if (gb) gb[b_scalar ? 0 : i] += g[i] * db(ai, bi, y[i]);
                       }
                     });
}

// Shared driver for unary elementwise ops; dfn receives (x_i, y_i).
template <typename Fwd, typename Dfn>
Tensor unary(const char* op, const Tensor& a, Fwd fwd, Dfn dfn) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    out[i] = fwd(av[i]);
  }
  auto result_values = out;
  return make_result(op, a.shape(), std::move(out), {a},
                     [a, dfn, y = std::move(result_values)](std::span<const double> g) {
                       double* ga = grad_buffer(a);
                       if (!ga) return;
                       const auto av = a.values();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         ga[i] += g[i] * dfn(av[i], y[i]);
                       }
                     });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  for (double v : b.values()) {
    if (v == 0.0) {
      throw DomainError("div: division by zero");
    }
  }
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double out) { return -out / y; });
}

Tensor add_scalar(const Tensor& a, double c) {
  return unary(
      "add_scalar", a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor scale(const Tensor& a, double c) {
  return unary(
      "scale", a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor negate(const Tensor& a) {
  return unary(
      "negate", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double v : a.values()) {
    if (!(v > 0.0)) {
      throw DomainError("log of non-positive value " + std::to_string(v));
    }
  }
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor clamped_log(const Tensor& a, double eps) {
  if (!(eps > 0.0)) {
    throw ParameterError("clamped_log: eps must be positive");
  }
  return unary(
      "clamped_log", a, [eps](double x) { return std::log(std::max(eps, x)); },
      [eps](double x, double) { return x > eps ? 1.0 / x : 0.0; });
}

Tensor clamp_min(const Tensor& a, double eps) {
  return unary(
      "clamp_min", a, [eps](double x) { return std::max(eps, x); },
      [eps](double x, double) { return x > eps ? 1.0 : 0.0; });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) {
          return 1.0 / (1.0 + std::exp(-x));
        }
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) {
    total += v;
  }
  return make_result("sum", {}, {total}, {a}, [a](std::span<const double> g) {
    double* ga = grad_buffer(a);
    if (!ga) return;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ga[i] += g[0];
    }
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) {
    throw ParameterError("mean of an empty tensor");
  }
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor row_sums(const Tensor& a) {
  require_matrix("row_sums", a);
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  const auto av = a.values();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out[i] += av[i * m + j];
    }
  }
  return make_result("row_sums", {n}, std::move(out), {a}, [a, n, m](std::span<const double> g) {
    double* ga = grad_buffer(a);
    if (!ga) return;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        ga[i * m + j] += g[i];
      }
    }
  });
}

Tensor column_sums(const Tensor& a) {
  require_matrix("column_sums", a);
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  const auto av = a.values();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out[j] += av[i * m + j];
    }
  }
  return make_result("column_sums", {m}, std::move(out), {a},
                     [a, n, m](std::span<const double> g) {
                       double* ga = grad_buffer(a);
                       if (!ga) return;
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t j = 0; j < m; ++j) {
                           ga[i * m + j] += g[j];
                         }
                       }
                     });
}

Tensor column_means(const Tensor& a) {
  require_matrix("column_means", a);
  if (a.rows() == 0) {
    throw ParameterError("column_means of an empty matrix");
  }
  return scale(column_sums(a), 1.0 / static_cast<double>(a.rows()));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()) + " disagree");
  }
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) {
        out[i * n + j] += aip * bv[p * n + j];
      }
    }
  }
  return make_result("matmul", {m, n}, std::move(out), {a, b},
                     [a, b, m, k, n](std::span<const double> g) {
                       const auto av = a.values();
                       const auto bv = b.values();
                       // d(a) = g b^T
                       if (double* ga = grad_buffer(a)) {
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t p = 0; p < k; ++p) {
                             double acc = 0.0;
                             for (std::size_t j = 0; j < n; ++j) {
                               acc += g[i * n + j] * bv[p * n + j];
                             }
                             ga[i * k + p] += acc;
                           }
                         }
                       }
                       // d(b) = a^T g
                       if (double* gb = grad_buffer(b)) {
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t p = 0; p < k; ++p) {
                             const double aip = av[i * k + p];
                             for (std::size_t j = 0; j < n; ++j) {
                               gb[p * n + j] += aip * g[i * n + j];
                             }
                           }
                         }
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  require_matrix("transpose", a);
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  const auto av = a.values();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out[j * n + i] = av[i * m + j];
    }
  }
  return make_result("transpose", {m, n}, std::move(out), {a},
                     [a, n, m](std::span<const double> g) {
                       double* ga = grad_buffer(a);
                       if (!ga) return;
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t j = 0; j < m; ++j) {
                           ga[i * m + j] += g[j * n + i];
                         }
                       }
                     });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeError("reshape: " + shape_string(a.shape()) + " -> " + shape_string(shape));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result("reshape", std::move(shape), std::move(out), {a},
                     [a](std::span<const double> g) {
                       double* ga = grad_buffer(a);
                       if (!ga) return;
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         ga[i] += g[i];
                       }
                     });
}


Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) {
    throw ParameterError("concat_rows: no inputs");
  }
  const std::size_t m = parts[0].cols();
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p.cols() != m) {
      throw ShapeError("concat_rows: column counts differ");
    }
    n += p.rows();
  }
  std::vector<double> out;
  out.reserve(n * m);
  for (const auto& p : parts) {
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  std::vector<Tensor> held(parts.begin(), parts.end());
  return make_result("concat_rows", {n, m}, std::move(out), parts,
                       [held](std::span<const double> g) {
                         std::size_t offset = 0;
                         for (const auto& p : held) {
                           if (double* gp = grad_buffer(p)) {
                             for (std::size_t i = 0; i < p.size(); ++i) {
                               gp[i] += g[offset + i];
                             }
                           }
                           offset += p.size();
                         }
                       });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) {
    throw ParameterError("concat_cols: no inputs");
  }
  const std::size_t n = parts[0].rows();
  std::size_t m = 0;
  for (const auto& p : parts) {
    if (p.rows() != n) {
      throw ShapeError("concat_cols: row counts differ");
    }
    m += p.cols();
  }
  std::vector<double> out(n * m);
  std::size_t col = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p.cols();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < pc; ++j) {
        out[i * m + col + j] = p.values()[i * pc + j];
      }
    }
    col += pc;
  }
  std::vector<Tensor> held(parts.begin(), parts.end());
  return make_result("concat_cols", {n, m}, std::move(out), parts,
                       [held, n, m](std::span<const double> g) {
                         std::size_t col = 0;
                         for (const auto& p : held) {
                           const std::size_t pc = p.cols();
                           if (double* gp = grad_buffer(p)) {
                             for (std::size_t i = 0; i < n; ++i) {
                               for (std::size_t j = 0; j < pc; ++j) {
                                 gp[i * pc + j] += g[i * m + col + j];
                               }
                             }
                           }
                           col += pc;
                         }
                       });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_matrix("slice_rows", a);
  if (begin > end || end > a.rows()) {
    throw ShapeError("slice_rows: range out of bounds");
  }
  const std::size_t m = a.cols();
  std::vector<double> out(a.values().begin() + static_cast<std::ptrdiff_t>(begin * m),
                          a.values().begin() + static_cast<std::ptrdiff_t>(end * m));
  return make_result("slice_rows", {end - begin, m}, std::move(out), {a},
                     [a, begin, m](std::span<const double> g) {
                       double* ga = grad_buffer(a);
                       if (!ga) return;
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         ga[begin * m + i] += g[i];
                       }
                     });
}

Tensor add_row(const Tensor& a, const Tensor& v) {
  require_matrix("add_row", a);
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  if (vector_length("add_row", v) != m) {
    throw ShapeError("add_row: vector length does not match column count");
  }
  const auto av = a.values();
  const auto vv = v.values();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out[i * m + j] = av[i * m + j] + vv[j];
    }
  }
  return make_result("add_row", {n, m}, std::move(out), {a, v},
                     [a, v, n, m](std::span<const double> g) {
                       if (double* ga = grad_buffer(a)) {
                         for (std::size_t i = 0; i < n * m; ++i) {
                           ga[i] += g[i];
                         }
                       }
                       if (double* gv = grad_buffer(v)) {
                         for (std::size_t i = 0; i < n; ++i) {
                           for (std::size_t j = 0; j < m; ++j) {
                             gv[j] += g[i * m + j];
                           }
                         }
                       }
                     });
}

Tensor scale_rows(const Tensor& a, const Tensor& v) {
  require_matrix("scale_rows", a);
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  if (vector_length("scale_rows", v) != n) {
    throw ShapeError("scale_rows: vector length does not match row count");
  }
  const auto av = a.values();
  const auto vv = v.values();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out[i * m + j] = av[i * m + j] * vv[i];
    }
  }
  return make_result("scale_rows", {n, m}, std::move(out), {a, v},
                     [a, v, n, m](std::span<const double> g) {
                       const auto av = a.values();
                       const auto vv = v.values();
                       double* ga = grad_buffer(a);
                       double* gv = grad_buffer(v);
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t j = 0; j < m; ++j) {
                           if (ga) ga[i * m + j] += g[i * m + j] * vv[i];
                           if (gv) gv[i] += g[i * m + j] * av[i * m + j];
                         }
                       }
                     });
}

Tensor div_rows(const Tensor& a, const Tensor& v) {
  require_matrix("div_rows", a);
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  if (vector_length("div_rows", v) != n) {
    throw ShapeError("div_rows: vector length does not match row count");
  }
  for (double x : v.values()) {
    if (x == 0.0) {
      throw DomainError("div_rows: division by zero");
    }
  }
  const auto av = a.values();
  const auto vv = v.values();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out[i * m + j] = av[i * m + j] / vv[i];
    }
  }
  return make_result("div_rows", {n, m}, std::move(out), {a, v},
                     [a, v, n, m](std::span<const double> g) {
                       const auto av = a.values();
                       const auto vv = v.values();
                       double* ga = grad_buffer(a);
                       double* gv = grad_buffer(v);
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t j = 0; j < m; ++j) {
                           if (ga) ga[i * m + j] += g[i * m + j] / vv[i];
                           if (gv) gv[i] -= g[i * m + j] * av[i * m + j] / (vv[i] * vv[i]);
                         }
                       }
                     });
}

Tensor softmax(const Tensor& logits, double temperature) {
  require_matrix("softmax", logits);
  if (!(temperature > 0.0)) {
    throw ParameterError("softmax: temperature must be positive");
  }
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  const auto zv = logits.values();
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = zv.data() + i * k;
    double* y = out.data() + i * k;
    const double zmax = *std::max_element(z, z + k);
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      y[j] = std::exp((z[j] - zmax) / temperature);
      denom += y[j];
    }
    for (std::size_t j = 0; j < k; ++j) {
      y[j] /= denom;
    }
  }
  auto probs = out;
  return make_result("softmax", {n, k}, std::move(out), {logits},
                     [logits, n, k, temperature, y = std::move(probs)](std::span<const double> g) {
                       double* gz = grad_buffer(logits);
                       if (!gz) return;
                       // dz_j = y_j (g_j - <g, y>) / T
                       for (std::size_t i = 0; i < n; ++i) {
                         double dot = 0.0;
                         for (std::size_t j = 0; j < k; ++j) {
                           dot += g[i * k + j] * y[i * k + j];
                         }
                         for (std::size_t j = 0; j < k; ++j) {
                           gz[i * k + j] += y[i * k + j] * (g[i * k + j] - dot) / temperature;
                         }
                       }
                     });
}

Tensor log_softmax(const Tensor& logits, double temperature) {
  require_matrix("log_softmax", logits);
  if (!(temperature > 0.0)) {
    throw ParameterError("log_softmax: temperature must be positive");
  }
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  const auto zv = logits.values();
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = zv.data() + i * k;
    const double zmax = *std::max_element(z, z + k);
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      denom += std::exp((z[j] - zmax) / temperature);
    }
    const double log_denom = std::log(denom);
    for (std::size_t j = 0; j < k; ++j) {
      out[i * k + j] = (z[j] - zmax) / temperature - log_denom;
    }
  }
  auto logp = out;
  return make_result("log_softmax", {n, k}, std::move(out), {logits},
                     [logits, n, k, temperature, lp = std::move(logp)](std::span<const double> g) {
                       double* gz = grad_buffer(logits);
                       if (!gz) return;
                       // dz_j = (g_j - softmax_j * sum(g)) / T
                       for (std::size_t i = 0; i < n; ++i) {
                         double gsum = 0.0;
                         for (std::size_t j = 0; j < k; ++j) {
                           gsum += g[i * k + j];
                         }
                         for (std::size_t j = 0; j < k; ++j) {
                           gz[i * k + j] +=
                               (g[i * k + j] - std::exp(lp[i * k + j]) * gsum) / temperature;
                         }
                       }
                     });
}

Tensor squared_distances(const Tensor& x, const Tensor& y) {
  require_matrix("squared_distances", x);
  require_matrix("squared_distances", y);
  const std::size_t n = x.rows();
  const std::size_t m = y.rows();
  const std::size_t d = x.cols();
  if (y.cols() != d) {
    throw ShapeError("squared_distances: feature dimensions " + std::to_string(d) + " and " +
                     std::to_string(y.cols()) + " differ");
  }
  const auto xv = x.values();
  const auto yv = y.values();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = xv[i * d + c] - yv[j * d + c];
        acc += diff * diff;
      }
      out[i * m + j] = acc;
    }
  }
  return make_result("squared_distances", {n, m}, std::move(out), {x, y},
                     [x, y, n, m, d](std::span<const double> g) {
                       const auto xv = x.values();
                       const auto yv = y.values();
                       double* gx = grad_buffer(x);
                       double* gy = grad_buffer(y);
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t j = 0; j < m; ++j) {
                           const double gij = 2.0 * g[i * m + j];
                           if (gij == 0.0) continue;
                           for (std::size_t c = 0; c < d; ++c) {
                             const double diff = xv[i * d + c] - yv[j * d + c];
                             if (gx) gx[i * d + c] += gij * diff;
                             if (gy) gy[j * d + c] -= gij * diff;
                           }
                         }
                       }
                     });
}

Tensor outer_rows(const Tensor& x, const Tensor& y) {
  require_matrix("outer_rows", x);
  require_matrix("outer_rows", y);
  const std::size_t n = x.rows();
  if (y.rows() != n) {
    throw ShapeError("outer_rows: batch sizes " + std::to_string(n) + " and " +
                     std::to_string(y.rows()) + " differ");
  }
  const std::size_t p = x.cols();
  const std::size_t q = y.cols();
  const auto xv = x.values();
  const auto yv = y.values();
  std::vector<double> out(n * p * q);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = 0; b < q; ++b) {
        out[i * p * q + a * q + b] = xv[i * p + a] * yv[i * q + b];
      }
    }
  }
  return make_result("outer_rows", {n, p * q}, std::move(out), {x, y},
                     [x, y, n, p, q](std::span<const double> g) {
                       const auto xv = x.values();
                       const auto yv = y.values();
                       double* gx = grad_buffer(x);
                       double* gy = grad_buffer(y);
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t a = 0; a < p; ++a) {
                           for (std::size_t b = 0; b < q; ++b) {
                             const double gi = g[i * p * q + a * q + b];
                             if (gx) gx[i * p + a] += gi * yv[i * q + b];
                             if (gy) gy[i * q + b] += gi * xv[i * p + a];
                           }
                         }
                       }
                     });
}

Tensor grad_reverse(const Tensor& a, double scale) {
  if (!(scale >= 0.0)) {
    throw ParameterError("grad_reverse: scale must be non-negative");
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  return make_result("grad_reverse", a.shape(), std::move(out), {a},
                     [a, scale](std::span<const double> g) {
                       double* ga = grad_buffer(a);
                       if (!ga) return;
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         ga[i] += -scale * g[i];
                       }
                     });
}

Tensor identity(std::size_t n) {
  std::vector<double> values(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    values[i * n + i] = 1.0;
  }
  return Tensor::matrix(n, n, std::move(values));
}

Tensor one_hot(std::span<const int> labels, std::size_t classes) {
  std::vector<double> values(labels.size() * classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || static_cast<std::size_t>(c) >= classes) {
      throw DomainError("label " + std::to_string(c) + " outside [0, " +
                        std::to_string(classes) + ")");
    }
    values[i * classes + static_cast<std::size_t>(c)] = 1.0;
  }
  return Tensor::matrix(labels.size(), classes, std::move(values));
}

}  // namespace uda
