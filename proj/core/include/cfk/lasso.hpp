#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace cfk {

/// Objective (1/n)||y - X b||^2 + lambda ||b||_1 (no intercept).
double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta, double lambda);

/// Smallest lambda with an all-zero solution for the objective above:
/// 2 max_j |x_j . y| / n.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// `count` log-spaced values from lambda_max down to min_ratio * lambda_max.
std::vector<double> lasso_lambda_grid(double lambda_max, std::size_t count = 100, double min_ratio = 1e-4);

struct LassoSolveOptions {
  double tolerance = 1e-7;  // stop when no coefficient moves more than this in a sweep
  std::size_t max_sweeps = 200000;
  bool record_objective = false;
};

struct LassoSolveResult {
  Eigen::VectorXd beta;
  std::size_t sweeps = 0;
  bool converged = false;
  std::vector<double> objective;  // after each sweep, when recorded
};

/// Cyclic coordinate descent with soft thresholding on the raw problem:
/// b_j <- S(rho_j, lambda/2) / c_j with rho_j = x_j.(y - X_{-j} b_{-j}) / n,
/// c_j = ||x_j||^2 / n. Zero columns keep b_j = 0.
LassoSolveResult lasso_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                             const LassoSolveOptions& options = {}, const Eigen::VectorXd* warm_start = nullptr);

struct LassoOptions {
  std::size_t grid_size = 100;
  double min_ratio = 1e-4;
  int inner_folds = 10;
  std::uint64_t seed = 1;
  std::optional<double> lambda;  // skip the inner search and use this value (standardized scale)
  LassoSolveOptions solver;
};

/// Lasso on standardized columns (mean 0, population sd 1) and standardized
/// response; lambda lives on that scale.
struct LassoModel {
  Eigen::VectorXd x_mean, x_scale;
  double y_mean = 0.0, y_scale = 1.0;
  Eigen::VectorXd beta;  // standardized scale
  double lambda = 0.0;
  std::vector<double> lambda_grid;
  std::vector<double> cv_mse;  // per grid value, original y units

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
  double predict(const Eigen::VectorXd& x) const;
  /// Coefficients and intercept on the original scale.
  Eigen::VectorXd coefficients() const;
  double intercept() const;
};

/// Picks lambda on the grid by inner k-fold CV mean squared error (each
/// inner training fold standardized on its own), then refits on all rows.
/// Throws InvalidArgument for n < 2, NonFinite for non-finite input.
LassoModel lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LassoOptions& options = {});

}  // namespace cfk
