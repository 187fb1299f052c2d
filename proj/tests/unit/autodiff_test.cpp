#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "test_support.hpp"
#include "uda/errors.hpp"
#include "uda/gradcheck.hpp"
#include "uda/ops.hpp"
#include "uda/tensor.hpp"

namespace uda {
namespace {

using testing::random_matrix;

// Central difference of a scalar function of a flat vector, written without
// the library's gradcheck.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = f(x);
    x[i] = keep - step;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * step);
  }
  return g;
}

TEST(Tensor, ShapeMustMatchValueCount) {
  EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_EQ(Tensor::zeros({3, 4}).size(), 12u);
  EXPECT_EQ(Tensor::zeros({0, 4}).size(), 0u);
}

TEST(Tensor, RejectsNonFiniteConstruction) {
  EXPECT_THROW(Tensor::vector({1.0, std::nan("")}), NumericError);
  EXPECT_THROW(Tensor::scalar(INFINITY), NumericError);
}

TEST(Tensor, DetachDropsGraphAndCopies) {
  Tensor x = Tensor::vector({1, 2}, true);
  Tensor y = scale(x, 2.0);
  Tensor d = y.detach();
  EXPECT_FALSE(d.requires_grad());
  EXPECT_TRUE(d.is_leaf());
  EXPECT_EQ(testing::values_of(d), (std::vector<double>{2, 4}));
}

TEST(Tensor, MutatorsRejectNonLeaves) {
  Tensor x = Tensor::vector({1, 2}, true);
  Tensor y = scale(x, 2.0);
  EXPECT_THROW(y.mutable_values(), Error);
  EXPECT_THROW(y.set_requires_grad(false), Error);
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  EXPECT_EQ(testing::values_of(matmul(identity(2), a)), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Matmul, RowTimesColumn) {
  const Tensor c = matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}}));
  EXPECT_EQ(c.shape(), (Shape{1, 1}));
  EXPECT_EQ(c.item(), 11.0);
}

TEST(Matmul, InnerDimensionMismatch) {
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ShapeError);
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  Tensor a = Tensor::matrix({{1, 1}}, true);
  const Tensor b = Tensor::matrix({{2}, {5}});
  sum(matmul(a, b)).backward();
  const auto numeric = numeric_gradient(
      [](const std::vector<double>& v) { return v[0] * 2 + v[1] * 5; }, {1, 1}, 1e-6);
  ASSERT_EQ(a.grad().size(), 2u);
  EXPECT_NEAR(a.grad()[0], 2.0, 1e-12);
  EXPECT_NEAR(a.grad()[1], 5.0, 1e-12);
  EXPECT_NEAR(a.grad()[0], numeric[0], 1e-8);
  EXPECT_NEAR(a.grad()[1], numeric[1], 1e-8);
}

TEST(Softmax, SymmetricLogits) {
  const Tensor p = softmax(Tensor::matrix({{0, 0}}));
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Softmax, TwoClassValue) {
  const Tensor p = softmax(Tensor::matrix({{2, 0}}));
  const double e2 = std::exp(2.0);
  EXPECT_NEAR(p[0], e2 / (e2 + 1), 1e-15);
  EXPECT_NEAR(p[0], 0.8808, 5e-5);
  EXPECT_NEAR(p[1], 0.1192, 5e-5);
}

TEST(Softmax, LargeTemperatureFlattens) {
  double previous = 1.0;
  for (double t : {1.0, 10.0, 100.0, 1e4, 1e6}) {
    const double gap = std::abs(softmax(Tensor::matrix({{2, 0}}), t)[0] - 0.5);
    EXPECT_LT(gap, previous);
    previous = gap;
  }
  EXPECT_LT(previous, 1e-6);
}

TEST(Softmax, NonPositiveTemperatureRejected) {
  EXPECT_THROW(softmax(Tensor::matrix({{1, 2}}), 0.0), ParameterError);
  EXPECT_THROW(softmax(Tensor::matrix({{1, 2}}), -1.0), ParameterError);
}

TEST(Softmax, RowsSumToOneAndIgnoreRowShifts) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    const std::size_t k = 2 + rng.below(7);
    const Tensor z = random_matrix(rng, n, k, 20.0);
    std::vector<double> shifted = testing::values_of(z);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = 100.0 * rng.normal();
      for (std::size_t j = 0; j < k; ++j) shifted[i * k + j] += c;
    }
    const Tensor p = softmax(z);
    const Tensor q = softmax(Tensor::matrix(n, k, shifted));
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        row += p.at(i, j);
        EXPECT_LT(std::abs(p.at(i, j) - q.at(i, j)), 1e-12);
      }
      EXPECT_NEAR(row, 1.0, 1e-12);
    }
  }
}

TEST(Elementwise, Examples) {
  EXPECT_EQ(testing::values_of(relu(Tensor::vector({-1, 2}))), (std::vector<double>{0, 2}));
  EXPECT_EQ(mean(Tensor::vector({1, 2, 3})).item(), 2.0);
  Tensor x = Tensor::vector({1, 2}, true);
  sum(mul(x, x)).backward();
  EXPECT_EQ(testing::grad_of(x), (std::vector<double>{2, 4}));
}

TEST(Elementwise, LogRequiresPositiveInputs) {
  EXPECT_THROW(log(Tensor::vector({1.0, 0.0})), DomainError);
  EXPECT_THROW(log(Tensor::vector({-1.0})), DomainError);
  EXPECT_NEAR(clamped_log(Tensor::vector({0.0}), 1e-12)[0], std::log(1e-12), 1e-15);
}

TEST(Elementwise, OverflowIsAnError) {
  EXPECT_THROW(exp(Tensor::vector({1000.0})), NumericError);
}

TEST(Elementwise, ShapeMismatch) {
  EXPECT_THROW(add(Tensor::zeros({2, 2}), Tensor::zeros({2, 3})), ShapeError);
  EXPECT_THROW(concat_rows(std::vector<Tensor>{Tensor::zeros({1, 2}), Tensor::zeros({1, 3})}),
               ShapeError);
}

TEST(Elementwise, TransposeAndConcat) {
  const Tensor a = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(testing::values_of(transpose(a)), (std::vector<double>{1, 4, 2, 5, 3, 6}));
  const Tensor c = concat_rows(std::vector<Tensor>{a, Tensor::matrix({{7, 8, 9}})});
  EXPECT_EQ(c.shape(), (Shape{3, 3}));
  EXPECT_EQ(c.at(2, 1), 8.0);
}

TEST(GradReverse, ForwardIsBitIdentical) {
  const Tensor x = Tensor::vector({3, 4});
  const Tensor y = grad_reverse(x, 1.0);
  EXPECT_EQ(testing::values_of(y), testing::values_of(x));
}

TEST(GradReverse, BackwardNegatesOnes) {
  Tensor x = Tensor::vector({0.3, -7, 11}, true);
  sum(grad_reverse(x, 1.0)).backward();
  EXPECT_EQ(testing::grad_of(x), (std::vector<double>{-1, -1, -1}));
}

TEST(GradReverse, ZeroScaleAnnihilates) {
  Tensor x = Tensor::vector({1, 2}, true);
  sum(grad_reverse(x, 0.0)).backward();
  for (double g : x.grad()) EXPECT_EQ(std::abs(g), 0.0);
}

TEST(GradReverse, BackwardIsExactlyMinusScaleTimesUpstream) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const double s = rng.uniform(0.0, 3.0);
    Tensor x = random_matrix(rng, 3, 4, 1.0, true);
    const Tensor w = random_matrix(rng, 3, 4);
    sum(mul(grad_reverse(x, s), w)).backward();
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_EQ(x.grad()[i], -s * w[i]);
    }
  }
}

TEST(GradReverse, NegativeScaleRejected) {
  EXPECT_THROW(grad_reverse(Tensor::vector({1}), -0.5), ParameterError);
}

TEST(Backward, SumOfVector) {
  Tensor x = Tensor::vector({1, 2, 3}, true);
  sum(x).backward();
  EXPECT_EQ(testing::grad_of(x), (std::vector<double>{1, 1, 1}));
}

TEST(Backward, NonScalarLossRejected) {
  Tensor x = Tensor::vector({1, 2}, true);
  EXPECT_THROW(mul(x, x).backward(), ShapeError);
}

TEST(Backward, FanOutAccumulatesAgainstFiniteDifferences) {
  Tensor x = Tensor::vector({0.5, -1.5}, true);
  // x used three times: x*x, exp(x) and 3x.
  sum(add(add(mul(x, x), exp(x)), scale(x, 3.0))).backward();
  const auto numeric = numeric_gradient(
      [](const std::vector<double>& v) {
        double s = 0;
        for (double e : v) s += e * e + std::exp(e) + 3 * e;
        return s;
      },
      {0.5, -1.5}, 1e-6);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(x.grad()[i], numeric[i], 1e-8);
}

TEST(Backward, LinearFanOutIsExactlyNFold) {
  for (int n = 1; n <= 6; ++n) {
    Tensor x = Tensor::vector({1.25, -2.0}, true);
    Tensor acc = scale(x, 0.75);
    for (int k = 1; k < n; ++k) acc = add(acc, scale(x, 0.75));
    sum(acc).backward();
    for (double g : x.grad()) EXPECT_EQ(g, 0.75 * n);
  }
}

TEST(Backward, LeafGradientsAccumulateAcrossCalls) {
  Tensor x = Tensor::vector({2.0}, true);
  sum(scale(x, 3.0)).backward();
  sum(scale(x, 3.0)).backward();
  EXPECT_EQ(x.grad()[0], 6.0);
  x.zero_grad();
  EXPECT_EQ(x.grad()[0], 0.0);
}

TEST(Tape, TopologicalOrderVisitsEachNodeOnce) {
  Tensor x = Tensor::vector({1, 2}, true);
  const Tensor a = exp(x);
  const Tensor b = mul(a, a);
  const Tensor loss = sum(add(b, a));
  const Tape tape = Tape::record(loss);
  // x, exp, mul, add, sum: the shared `a` appears once.
  EXPECT_EQ(tape.size(), 5u);
  const auto ops = tape.ops();
  ASSERT_EQ(ops.size(), 4u);
  EXPECT_EQ(ops.front(), "exp");
  EXPECT_EQ(ops.back(), "sum");
  const std::map<std::string_view, int> position = {{ops[0], 0}, {ops[1], 1}, {ops[2], 2}, {ops[3], 3}};
  EXPECT_LT(position.at("exp"), position.at("mul"));
  EXPECT_LT(position.at("mul"), position.at("add"));
}

TEST(Gradcheck, PolynomialIsNearlyExact) {
  const auto report =
      gradcheck([](const Tensor& x) { return sum(mul(x, x)); }, Tensor::vector({1, 2}), 1e-5);
  EXPECT_LT(report.max_relative_error, 1e-6);
}

TEST(Gradcheck, SoftmaxCrossEntropyOnRandomLogits) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor z = random_matrix(rng, 5, 4, 2.0);
    const Tensor targets = one_hot(testing::random_labels(rng, 5, 4), 4);
    const auto report = gradcheck(
        [&](const Tensor& x) { return scale(sum(mul(targets, log_softmax(x))), -0.2); }, z);
    EXPECT_LT(report.max_relative_error, 1e-4);
  }
}

TEST(Gradcheck, GradReverseNegatesIdentityComposedGradient) {
  Rng rng(5);
  const Tensor x0 = random_matrix(rng, 3, 3);
  const Tensor w = random_matrix(rng, 3, 3);
  const auto body = [&](const Tensor& h) { return sum(mul(exp(scale(h, 0.5)), w)); };

  Tensor reversed = Tensor::from(x0.shape(), testing::values_of(x0), true);
  body(grad_reverse(reversed, 1.0)).backward();

  // Numeric gradient of the identity-composed function.
  const auto numeric = numeric_gradient(
      [&](const std::vector<double>& v) { return body(Tensor::matrix(3, 3, v)).item(); },
      testing::values_of(x0), 1e-6);
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    EXPECT_NEAR(reversed.grad()[i], -numeric[i], 1e-7 * (1 + std::abs(numeric[i])));
  }
}

TEST(Gradcheck, NonFiniteOutputIsNumericError) {
  EXPECT_THROW(gradcheck([](const Tensor& x) { return sum(exp(scale(x, 1000.0))); },
                         Tensor::vector({1.0})),
               NumericError);
}

TEST(Gradcheck, RelativeErrorFloor) {
  EXPECT_EQ(gradcheck_relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(gradcheck_relative_error(1.0, 3.0), 0.5);
  EXPECT_DOUBLE_EQ(gradcheck_relative_error(1e-14, 0.0), 0.01);
  EXPECT_DOUBLE_EQ(gradcheck_relative_error(1e-10, 0.0), 1.0);
}

// Every differentiable primitive (grad_reverse is deliberately not the
// derivative of its forward pass and is tested exactly above), composed with a
// fixed random weighting so no gradient is identically zero, over 100 random
// shapes and seeds.
struct Primitive {
  std::string name;
  // Builds op(x) for a random x of the given shape; `rng` supplies any
  // constant operands.
  std::function<Tensor(const Tensor&, Rng&, std::size_t, std::size_t)> op;
  // Maps the random normal input into the op's smooth domain.
  std::function<double(double)> domain = [](double v) { return v; };
};

std::vector<Primitive> primitives() {
  const auto away_from_zero = [](double v) { return v >= 0 ? v + 0.1 : v - 0.1; };
  const auto positive = [](double v) { return std::abs(v) + 0.2; };
  std::vector<Primitive> p;
  p.push_back({"add", [](const Tensor& x, Rng& r, auto n, auto m) { return add(x, random_matrix(r, n, m)); }});
  p.push_back({"add_scalar_broadcast", [](const Tensor& x, Rng& r, auto, auto) {
                 return add(x, Tensor::scalar(r.normal()));
               }});
  p.push_back({"sub", [](const Tensor& x, Rng& r, auto n, auto m) { return sub(random_matrix(r, n, m), x); }});
  p.push_back({"mul", [](const Tensor& x, Rng& r, auto n, auto m) { return mul(x, random_matrix(r, n, m)); }});
  p.push_back({"mul_self", [](const Tensor& x, Rng&, auto, auto) { return mul(x, x); }});
  p.push_back({"div", [](const Tensor& x, Rng& r, auto n, auto m) { return div(random_matrix(r, n, m), x); }, positive});
  p.push_back({"div_numerator", [](const Tensor& x, Rng& r, auto n, auto m) {
                 return div(x, add_scalar(mul(random_matrix(r, n, m), random_matrix(r, n, m)), 2.0));
               }});
  p.push_back({"add_scalar", [](const Tensor& x, Rng&, auto, auto) { return add_scalar(x, 0.7); }});
  p.push_back({"scale", [](const Tensor& x, Rng&, auto, auto) { return scale(x, -1.3); }});
  p.push_back({"negate", [](const Tensor& x, Rng&, auto, auto) { return negate(x); }});
  p.push_back({"exp", [](const Tensor& x, Rng&, auto, auto) { return exp(x); }});
  p.push_back({"log", [](const Tensor& x, Rng&, auto, auto) { return log(x); }, positive});
  p.push_back({"clamped_log", [](const Tensor& x, Rng&, auto, auto) { return clamped_log(x, 1e-12); }, positive});
  p.push_back({"clamp_min", [](const Tensor& x, Rng&, auto, auto) { return clamp_min(x, 0.05); }, away_from_zero});
  p.push_back({"relu", [](const Tensor& x, Rng&, auto, auto) { return relu(x); }, away_from_zero});
  p.push_back({"sigmoid", [](const Tensor& x, Rng&, auto, auto) { return sigmoid(x); }});
  p.push_back({"sum", [](const Tensor& x, Rng&, auto, auto) { return mul(sum(x), sum(x)); }});
  p.push_back({"mean", [](const Tensor& x, Rng&, auto, auto) { return mul(mean(x), sum(x)); }});
  p.push_back({"row_sums", [](const Tensor& x, Rng&, auto, auto) { return row_sums(x); }});
  p.push_back({"column_sums", [](const Tensor& x, Rng&, auto, auto) { return column_sums(x); }});
  p.push_back({"column_means", [](const Tensor& x, Rng&, auto, auto) { return column_means(x); }});
  p.push_back({"matmul_left", [](const Tensor& x, Rng& r, auto, auto m) { return matmul(x, random_matrix(r, m, 3)); }});
  p.push_back({"matmul_right", [](const Tensor& x, Rng& r, auto n, auto) { return matmul(random_matrix(r, 2, n), x); }});
  p.push_back({"transpose", [](const Tensor& x, Rng&, auto, auto) { return transpose(x); }});
  p.push_back({"reshape", [](const Tensor& x, Rng&, auto n, auto m) { return reshape(x, {m, n}); }});
  p.push_back({"concat_rows", [](const Tensor& x, Rng& r, auto, auto m) {
                 return concat_rows(std::vector<Tensor>{x, random_matrix(r, 2, m), x});
               }});
  p.push_back({"concat_cols", [](const Tensor& x, Rng& r, auto n, auto) {
                 return concat_cols(std::vector<Tensor>{random_matrix(r, n, 2), x});
               }});
  p.push_back({"slice_rows", [](const Tensor& x, Rng&, auto n, auto) { return slice_rows(x, n / 2, n); }});
  p.push_back({"add_row", [](const Tensor& x, Rng& r, auto, auto m) {
                 return add_row(x, testing::random_matrix(r, 1, m));
               }});
  p.push_back({"add_row_vector", [](const Tensor& x, Rng& r, auto n, auto) {
                 return add_row(random_matrix(r, 3, n), reshape(column_sums(transpose(x)), {1, n}));
               }});
  p.push_back({"scale_rows", [](const Tensor& x, Rng& r, auto n, auto) {
                 return scale_rows(x, Tensor::vector(testing::values_of(random_matrix(r, n, 1))));
               }});
  p.push_back({"scale_rows_factor", [](const Tensor& x, Rng& r, auto n, auto m) {
                 return scale_rows(random_matrix(r, n, m), row_sums(x));
               }});
  p.push_back({"div_rows", [](const Tensor& x, Rng& r, auto n, auto m) {
                 return div_rows(random_matrix(r, n, m), row_sums(x));
               }, positive});
  p.push_back({"softmax", [](const Tensor& x, Rng&, auto, auto) { return softmax(x, 1.7); }});
  p.push_back({"log_softmax", [](const Tensor& x, Rng&, auto, auto) { return log_softmax(x, 0.8); }});
  p.push_back({"squared_distances", [](const Tensor& x, Rng& r, auto, auto m) {
                 return squared_distances(x, random_matrix(r, 3, m));
               }});
  p.push_back({"squared_distances_self", [](const Tensor& x, Rng&, auto, auto) { return squared_distances(x, x); }});
  p.push_back({"outer_rows", [](const Tensor& x, Rng& r, auto n, auto) { return outer_rows(x, random_matrix(r, n, 2)); }});
  p.push_back({"outer_rows_right", [](const Tensor& x, Rng& r, auto n, auto) { return outer_rows(random_matrix(r, n, 3), x); }});
  return p;
}

TEST(PrimitiveGradients, AllPassGradcheckOverRandomShapes) {
  const auto prims = primitives();
  std::set<std::string> checked;
  for (const auto& prim : prims) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(derive_seed(seed, 0xabc));
      const std::size_t n = 1 + rng.below(5);
      const std::size_t m = 1 + rng.below(5);
      std::vector<double> v(n * m);
      for (double& e : v) e = prim.domain(rng.normal());
      const Tensor x0 = Tensor::matrix(n, m, v);
      const std::uint64_t op_seed = rng.next();
      const auto f = [&](const Tensor& x) {
        Rng constants(op_seed);
        const Tensor y = prim.op(x, constants, n, m);
        // Fixed random weighting of the outputs.
        const Tensor w = Tensor::from(y.shape(), testing::values_of(
            random_matrix(constants, y.size(), 1)));
        return sum(mul(y, w));
      };
      worst = std::max(worst, gradcheck(f, x0, 1e-5).max_relative_error);
    }
    EXPECT_LT(worst, 1e-4) << prim.name;
    checked.insert(prim.name);
  }
  EXPECT_EQ(checked.size(), prims.size());
}

}  // namespace
}  // namespace uda
