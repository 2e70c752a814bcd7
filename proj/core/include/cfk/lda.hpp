#pragma once

#include <array>
#include <span>

#include <Eigen/Dense>

namespace cfk {

struct LdaOptions {
  bool equal_priors = true;  // otherwise priors are the class frequencies
};

/// Two-class Fisher/Gaussian LDA with a pooled covariance (divisor n - 2).
/// decision(x) = w.x + b; positive scores mean class 1.
struct LdaModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  std::array<double, 2> priors{0.5, 0.5};
  std::array<Eigen::VectorXd, 2> means;
  bool ridge_applied = false;

  double decision(const Eigen::VectorXd& x) const;
  /// Score 0 goes to the class with the larger prior, then class 0.
  int predict(const Eigen::VectorXd& x) const;
  int label_for(double score) const;
};

/// w = S^-1 (mu1 - mu0), b = -w.(mu0 + mu1)/2 + log(pi1/pi0). When the pooled
/// covariance is not numerically positive definite, 1e-8 * trace/p is added
/// to its diagonal. Labels must be 0/1. Throws SingleClass,
/// SingularCovariance, DimMismatch, NonFinite.
LdaModel lda_fit(const Eigen::MatrixXd& X, std::span<const int> labels, const LdaOptions& options = {});

}  // namespace cfk
