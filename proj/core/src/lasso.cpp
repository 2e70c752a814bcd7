#include "cfk/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfk/dataset.hpp"
#include "cfk/error.hpp"

namespace cfk {

double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                       double lambda) {
  const double n = static_cast<double>(X.rows());
  return (y - X * beta).squaredNorm() / n + lambda * beta.lpNorm<1>();
}

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() == 0 || X.cols() == 0) return 0.0;
  return 2.0 * (X.transpose() * y).cwiseAbs().maxCoeff() / static_cast<double>(X.rows());
}

std::vector<double> lasso_lambda_grid(double lambda_max, std::size_t count, double min_ratio) {
  std::vector<double> grid;
  if (count == 0) return grid;
  // A single point, or a zero lambda_max (y orthogonal to every column),
  // collapses the grid to lambda_max itself.
  if (count == 1 || !(lambda_max > 0.0)) return {std::max(lambda_max, 0.0)};
  const double lo = std::log(lambda_max * min_ratio), hi = std::log(lambda_max);
  for (std::size_t k = 0; k < count; ++k) {
    grid.push_back(std::exp(hi + (lo - hi) * static_cast<double>(k) / static_cast<double>(count - 1)));
  }
  grid.front() = lambda_max;
  return grid;
}

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Coordinate descent on the covariance form: G = X'X/n, q = X'y/n.
LassoSolveResult solve_gram(const Eigen::MatrixXd& G, const Eigen::VectorXd& q, double yy, double lambda,
                            const LassoSolveOptions& options, const Eigen::VectorXd* warm) {
  const Eigen::Index p = G.rows();
  LassoSolveResult r;
  r.beta = warm != nullptr ? *warm : Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(G(j, j) > 0.0)) r.beta(j) = 0.0;
  }
  Eigen::VectorXd gb = G * r.beta;
  auto objective = [&] { return yy - 2.0 * q.dot(r.beta) + r.beta.dot(gb) + lambda * r.beta.lpNorm<1>(); };
  for (r.sweeps = 0; r.sweeps < options.max_sweeps;) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double c = G(j, j);
      if (!(c > 0.0)) continue;
      const double old = r.beta(j);
      const double rho = q(j) - gb(j) + c * old;
      const double updated = soft_threshold(rho, 0.5 * lambda) / c;
      const double delta = updated - old;
      if (delta != 0.0) {
        r.beta(j) = updated;
        gb += G.col(j) * delta;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    ++r.sweeps;
    if (options.record_objective) r.objective.push_back(objective());
    if (max_change < options.tolerance) {
      r.converged = true;
      break;
    }
  }
  return r;
}

struct Standardized {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd x_mean, x_scale;
  double y_mean = 0.0, y_scale = 1.0;
};

Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Standardized s;
  const double n = static_cast<double>(X.rows());
  s.x_mean = X.colwise().mean().transpose();
  s.X = X.rowwise() - s.x_mean.transpose();
  s.x_scale = (s.X.colwise().squaredNorm() / n).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < s.x_scale.size(); ++j) {
    if (s.x_scale(j) > 1e-12 * std::max(1.0, std::abs(s.x_mean(j)))) {
      s.X.col(j) /= s.x_scale(j);
    } else {
      s.x_scale(j) = 1.0;
      s.X.col(j).setZero();
    }
  }
  s.y_mean = y.mean();
  s.y = y.array() - s.y_mean;
  const double sd = std::sqrt(s.y.squaredNorm() / n);
  s.y_scale = sd > 0.0 ? sd : 1.0;
  s.y /= s.y_scale;
  return s;
}

// Solves the whole grid with warm starts; returns one coefficient vector per lambda.
std::vector<Eigen::VectorXd> solve_path(const Standardized& s, const std::vector<double>& grid,
                                        const LassoSolveOptions& options) {
  const double n = static_cast<double>(s.X.rows());
  const Eigen::MatrixXd G = (s.X.transpose() * s.X) / n;
  const Eigen::VectorXd q = (s.X.transpose() * s.y) / n;
  const double yy = s.y.squaredNorm() / n;
  std::vector<Eigen::VectorXd> path;
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(s.X.cols());
  for (double lambda : grid) {
    warm = solve_gram(G, q, yy, lambda, options, &warm).beta;
    path.push_back(warm);
  }
  return path;
}

}  // namespace

LassoSolveResult lasso_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                             const LassoSolveOptions& options, const Eigen::VectorXd* warm_start) {
  if (X.rows() != y.size()) throw Error(ErrorCode::DimMismatch, "X rows and y length differ");
  if (X.rows() < 1) throw Error(ErrorCode::InvalidArgument, "lasso needs at least one sample");
  if (!X.allFinite() || !y.allFinite() || !std::isfinite(lambda)) {
    throw Error(ErrorCode::NonFinite, "lasso input contains non-finite values");
  }
  if (lambda < 0.0) throw Error(ErrorCode::InvalidArgument, "lambda must be non-negative");
  if (warm_start != nullptr && warm_start->size() != X.cols()) {
    throw Error(ErrorCode::DimMismatch, "warm start has the wrong dimension");
  }
  const double n = static_cast<double>(X.rows());
  return solve_gram((X.transpose() * X) / n, (X.transpose() * y) / n, y.squaredNorm() / n, lambda, options,
                    warm_start);
}

Eigen::VectorXd LassoModel::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != x_mean.size()) throw Error(ErrorCode::DimMismatch, "lasso input has the wrong dimension");
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict(Eigen::VectorXd(X.row(i).transpose()));
  return out;
}

double LassoModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != x_mean.size()) throw Error(ErrorCode::DimMismatch, "lasso input has the wrong dimension");
  const Eigen::VectorXd z = (x - x_mean).cwiseQuotient(x_scale);
  return y_mean + y_scale * z.dot(beta);
}

Eigen::VectorXd LassoModel::coefficients() const { return y_scale * beta.cwiseQuotient(x_scale); }

double LassoModel::intercept() const { return y_mean - coefficients().dot(x_mean); }

LassoModel lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LassoOptions& options) {
  const Eigen::Index n = X.rows();
  if (n != y.size()) throw Error(ErrorCode::DimMismatch, "X rows and y length differ");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "lasso needs at least 2 samples");
  if (!X.allFinite() || !y.allFinite()) throw Error(ErrorCode::NonFinite, "lasso input contains non-finite values");

  const Standardized full = standardize(X, y);
  LassoModel model;
  model.x_mean = full.x_mean;
  model.x_scale = full.x_scale;
  model.y_mean = full.y_mean;
  model.y_scale = full.y_scale;

  if (options.lambda) {
    model.lambda = *options.lambda;
  } else {
    model.lambda_grid = lasso_lambda_grid(lasso_lambda_max(full.X, full.y), options.grid_size, options.min_ratio);
    const int k = std::min<int>(options.inner_folds, static_cast<int>(n));
    if (k < 2 || model.lambda_grid.size() < 2) {
      model.lambda = model.lambda_grid.empty() ? 0.0 : model.lambda_grid.back();
    } else {
      const std::vector<int> fold = random_folds(static_cast<std::size_t>(n), k, options.seed);
      model.cv_mse.assign(model.lambda_grid.size(), 0.0);
      for (int f = 0; f < k; ++f) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        if (train.size() < 2 || test.empty()) continue;
        const Standardized s = standardize(X(train, Eigen::all), y(train));
        const auto path = solve_path(s, model.lambda_grid, options.solver);
        for (std::size_t g = 0; g < path.size(); ++g) {
          for (Eigen::Index i : test) {
            const Eigen::VectorXd z = (X.row(i).transpose() - s.x_mean).cwiseQuotient(s.x_scale);
            const double pred = s.y_mean + s.y_scale * z.dot(path[g]);
            model.cv_mse[g] += (pred - y(i)) * (pred - y(i));
          }
        }
      }
      for (double& m : model.cv_mse) m /= static_cast<double>(n);
      const auto best = std::min_element(model.cv_mse.begin(), model.cv_mse.end());
      model.lambda = model.lambda_grid[static_cast<std::size_t>(best - model.cv_mse.begin())];
    }
  }

  // Refit along the grid down to the chosen value so the warm start matches the path.
  std::vector<double> refit;
  for (double l : model.lambda_grid) {
    if (l >= model.lambda) refit.push_back(l);
  }
  if (refit.empty() || refit.back() != model.lambda) refit.push_back(model.lambda);
  model.beta = solve_path(full, refit, options.solver).back();
  return model;
}

}  // namespace cfk
