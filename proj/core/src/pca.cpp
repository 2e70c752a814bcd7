#include "cfk/pca.hpp"

#include <Eigen/Eigenvalues>

#include "cfk/error.hpp"

namespace cfk {

Eigen::MatrixXd PcaBasis::transform(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) throw Error(ErrorCode::DimMismatch, "PCA input has the wrong number of features");
  return (X.rowwise() - mean.transpose()) * components;
}

Eigen::VectorXd PcaBasis::transform(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size()) throw Error(ErrorCode::DimMismatch, "PCA input has the wrong number of features");
  return components.transpose() * (x - mean);
}

PcaBasis pca_fit(const Eigen::MatrixXd& X, double variance_target) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "PCA needs at least 2 samples");
  if (p < 1) throw Error(ErrorCode::InvalidArgument, "PCA needs at least 1 feature");
  if (!(variance_target > 0.0 && variance_target <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "variance target must lie in (0, 1]");
  }
  if (!X.allFinite()) throw Error(ErrorCode::NonFinite, "PCA input contains non-finite values");

  PcaBasis basis;
  basis.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd Xc = X.rowwise() - basis.mean.transpose();
  const double denom = static_cast<double>(n - 1);

  Eigen::VectorXd values;   // ascending from the solver
  Eigen::MatrixXd vectors;  // p x m, columns matching `values`
  if (p <= n) {
    const Eigen::MatrixXd cov = (Xc.transpose() * Xc) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    values = es.eigenvalues();
    vectors = es.eigenvectors();
  } else {
    const Eigen::MatrixXd gram = (Xc * Xc.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    values = es.eigenvalues();
    vectors = Xc.transpose() * es.eigenvectors();  // unnormalized; fixed below
  }

  const double largest = values.size() > 0 ? values.maxCoeff() : 0.0;
  const double total = (Xc.array().square().sum()) / denom;
  if (!(largest > 0.0) || !(total > 0.0)) {
    throw Error(ErrorCode::ZeroVariance, "all samples are identical; no principal components");
  }
  const double floor = largest * 1e-12 * static_cast<double>(std::max(n, p));

  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = values.size(); k-- > 0;) {
    if (values(k) > floor) keep.push_back(k);
  }
  basis.eigenvalues.resize(static_cast<Eigen::Index>(keep.size()));
  Eigen::MatrixXd comps(p, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    basis.eigenvalues(jj) = values(keep[j]);
    Eigen::VectorXd v = vectors.col(keep[j]);
    v.normalize();
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::abs(v(i)) > best * (1.0 + 1e-12)) {
        best = std::abs(v(i));
        arg = i;
      }
    }
    if (v(arg) < 0.0) v = -v;
    comps.col(jj) = v;
  }
  basis.explained_variance_ratio = basis.eigenvalues / total;

  double cumulative = 0.0;
  std::size_t retained = 0;
  while (retained < keep.size()) {
    cumulative += basis.explained_variance_ratio(static_cast<Eigen::Index>(retained));
    ++retained;
    if (cumulative >= variance_target - 1e-12) break;
  }
  basis.retained = retained;
  basis.components = comps.leftCols(static_cast<Eigen::Index>(retained));
  return basis;
}

}  // namespace cfk
