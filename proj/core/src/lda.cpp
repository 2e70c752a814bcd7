#include "cfk/lda.hpp"

#include <cmath>

#include "cfk/error.hpp"

namespace cfk {

double LdaModel::decision(const Eigen::VectorXd& x) const {
  if (x.size() != weights.size()) throw Error(ErrorCode::DimMismatch, "LDA input has the wrong dimension");
  return weights.dot(x) + bias;
}

int LdaModel::label_for(double score) const {
  if (score > 0.0) return 1;
  if (score < 0.0) return 0;
  return priors[1] > priors[0] ? 1 : 0;
}

int LdaModel::predict(const Eigen::VectorXd& x) const { return label_for(decision(x)); }

LdaModel lda_fit(const Eigen::MatrixXd& X, std::span<const int> labels, const LdaOptions& options) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (static_cast<std::size_t>(n) != labels.size()) throw Error(ErrorCode::DimMismatch, "labels and rows differ");
  if (!X.allFinite()) throw Error(ErrorCode::NonFinite, "LDA input contains non-finite values");
  if (p < 1) throw Error(ErrorCode::InvalidArgument, "LDA needs at least one feature");
  std::array<Eigen::Index, 2> count{0, 0};
  LdaModel model;
  for (auto& m : model.means) m = Eigen::VectorXd::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y != 0 && y != 1) throw Error(ErrorCode::InvalidArgument, "LDA labels must be 0 or 1");
    model.means[static_cast<std::size_t>(y)] += X.row(i).transpose();
    ++count[static_cast<std::size_t>(y)];
  }
  if (count[0] == 0 || count[1] == 0) throw Error(ErrorCode::SingleClass, "LDA needs samples from both classes");
  for (std::size_t c = 0; c < 2; ++c) model.means[c] /= static_cast<double>(count[c]);
  if (options.equal_priors) {
    model.priors = {0.5, 0.5};
  } else {
    model.priors = {static_cast<double>(count[0]) / n, static_cast<double>(count[1]) / n};
  }

  Eigen::MatrixXd centered(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    centered.row(i) = X.row(i) - model.means[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].transpose();
  }
  const double dof = static_cast<double>(std::max<Eigen::Index>(n - 2, 1));
  Eigen::MatrixXd cov = (centered.transpose() * centered) / dof;
  const Eigen::VectorXd diff = model.means[1] - model.means[0];

  auto solve = [&](const Eigen::MatrixXd& s, Eigen::VectorXd& w) {
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) return false;
    // Reject numerically singular factors (reciprocal condition estimate).
    const Eigen::VectorXd d = llt.matrixL().toDenseMatrix().diagonal();
    const double ratio = d.minCoeff() / d.maxCoeff();
    if (!(ratio * ratio > 1e-13)) return false;
    w = llt.solve(diff);
    return w.allFinite();
  };
  Eigen::VectorXd w;
  if (!solve(cov, w)) {
    const double trace = cov.trace();
    const double ridge = trace > 0.0 ? 1e-8 * trace / static_cast<double>(p) : 1e-8;
    cov.diagonal().array() += ridge;
    model.ridge_applied = true;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularCovariance, "pooled covariance is singular");
    w = llt.solve(diff);
    if (!w.allFinite()) throw Error(ErrorCode::SingularCovariance, "pooled covariance is singular");
  }
  model.weights = w;
  model.bias = -0.5 * w.dot(model.means[0] + model.means[1]) + std::log(model.priors[1] / model.priors[0]);
  return model;
}

}  // namespace cfk
