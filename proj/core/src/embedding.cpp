#include "uda/embedding.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "uda/errors.hpp"

namespace uda {

Embedding2D pca_2d(const Tensor& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n < 3) {
    throw ParameterError("embedding needs at least 3 rows, got " + std::to_string(n));
  }
  if (d == 0) {
    throw ParameterError("embedding needs at least one feature column");
  }
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMatrix> x(features.values().data(), static_cast<Eigen::Index>(n),
                                      static_cast<Eigen::Index>(d));
  const RowMatrix centred = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(n);

  // Eigenvalues come back in increasing order.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw NumericError("covariance eigendecomposition failed");
  }
  const Eigen::Index components = std::min<Eigen::Index>(2, static_cast<Eigen::Index>(d));
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), 2);
  Embedding2D out;
  for (Eigen::Index c = 0; c < components; ++c) {
    const Eigen::Index source = static_cast<Eigen::Index>(d) - 1 - c;
    Eigen::VectorXd v = solver.eigenvectors().col(source);
    Eigen::Index largest = 0;
    v.cwiseAbs().maxCoeff(&largest);
    if (v(largest) < 0) {
      v = -v;
    }
    basis.col(c) = v;
    out.explained_variance.push_back(std::max(0.0, solver.eigenvalues()(source)));
  }
  if (components < 2) {
    out.explained_variance.push_back(0.0);
  }
  out.total_variance = cov.trace();

  const Eigen::MatrixXd projected = centred * basis;
  std::vector<double> values(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    values[2 * i] = projected(static_cast<Eigen::Index>(i), 0);
    values[2 * i + 1] = projected(static_cast<Eigen::Index>(i), 1);
  }
  out.points = Tensor::matrix(n, 2, std::move(values));
  return out;
}

}  // namespace uda
