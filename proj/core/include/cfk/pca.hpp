#pragma once

#include <Eigen/Dense>

namespace cfk {

/// Principal components of the row-centered data.
struct PcaBasis {
  Eigen::VectorXd mean;                      // p
  Eigen::MatrixXd components;                // p x retained, orthonormal columns
  Eigen::VectorXd eigenvalues;               // all non-negligible covariance eigenvalues, descending
  Eigen::VectorXd explained_variance_ratio;  // eigenvalues / total variance
  std::size_t retained = 0;

  /// Projects rows of X (n x p) onto the retained components.
  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd transform(const Eigen::VectorXd& x) const;
};

/// Fits PCA on the sample covariance (divisor n-1) and keeps the smallest
/// number of leading components whose cumulative explained variance reaches
/// `variance_target`. Uses the p x p covariance when p <= n and the n x n
/// Gram matrix otherwise. Each component's largest-magnitude loading is made
/// positive (first such entry on ties). Throws InvalidArgument for n < 2 or a
/// target outside (0, 1], ZeroVariance when all rows are identical, NonFinite
/// for non-finite input.
PcaBasis pca_fit(const Eigen::MatrixXd& X, double variance_target = 0.95);

}  // namespace cfk
