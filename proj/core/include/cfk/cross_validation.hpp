#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cfk/lasso.hpp"
#include "cfk/lda.hpp"
#include "cfk/pca.hpp"

namespace cfk {

enum class Task { Classify, Regress };

std::string_view to_string(Task t) noexcept;

struct CvOptions {
  int k = 10;
  int repeats = 100;
  std::uint64_t seed = 1;
  double variance_target = 0.95;
  LdaOptions lda;
  LassoOptions lasso;
  int jobs = 1;
};

/// Model trained on one training fold: PCA fitted on that fold, then LDA
/// (classify) or lasso (regress) in the reduced space. When the fold's
/// features have zero variance the model is degenerate and predicts the
/// majority training class (ties: class 0) or the training mean.
struct FoldModel {
  Task task = Task::Classify;
  bool degenerate = false;
  double fallback = 0.0;
  PcaBasis pca;
  LdaModel lda;
  LassoModel lasso;

  /// LDA decision value or regression prediction.
  double score(const Eigen::VectorXd& x) const;
  /// Predicted label (0/1) or regression prediction.
  double predict(const Eigen::VectorXd& x) const;
};

/// Classification targets must be 0/1.
FoldModel fit_fold_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task, const CvOptions& options,
                         std::uint64_t seed);

/// Stratified (classify) or plain (regress) fold labels for one split.
std::vector<int> split_folds(const Eigen::VectorXd& y, Task task, int k, std::uint64_t seed);

/// Trains one model per fold on all rows outside that fold.
std::vector<FoldModel> fit_fold_models(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task,
                                       const std::vector<int>& folds, const CvOptions& options, std::uint64_t seed);

struct CvResult {
  Task task = Task::Classify;
  int k = 10;
  int repeats = 0;
  std::uint64_t seed = 0;
  /// Classify: mean over folds of fold accuracy. Regress: Pearson r of the
  /// concatenated out-of-fold predictions with the targets.
  std::vector<double> per_split_score;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over splits
  std::vector<std::vector<double>> predictions;  // [split][row] out-of-fold label or value
  std::vector<std::vector<double>> scores;       // [split][row] out-of-fold decision value / prediction
  double mean_retained = 0.0;                    // mean PCA components kept per fold

  /// Mean over splits of the per-row predictions (or scores).
  std::vector<double> mean_prediction() const;
  std::vector<double> mean_score() const;
};

/// k-fold cross-validation repeated over `repeats` splits. Split s uses fold
/// seed derive_seed(seed, s); splits run in parallel and are reduced in index
/// order, so results do not depend on `jobs`.
CvResult cross_validate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task, const CvOptions& options);

struct ModelComparison {
  std::size_t a_below_b = 0;  // splits where a scored strictly below b
  std::size_t splits = 0;
  bool significant = false;   // a_below_b > 0.95 * splits
};

ModelComparison compare_models(const CvResult& a, const CvResult& b);

struct HumanAccuracyPrediction {
  std::vector<std::vector<double>> predictions;  // [split][row]
  std::vector<double> per_split_r;
  double mean_r = 0.0;
  double std_r = 0.0;
  std::vector<double> mean_prediction() const;
};

/// Separate cross-validated lasso models for each class (labels 0/1); the
/// out-of-fold predictions of both classes are concatenated back into row
/// order and correlated with the observed accuracy.
HumanAccuracyPrediction predict_human_accuracy(const Eigen::MatrixXd& X, const Eigen::VectorXd& accuracy,
                                               std::span<const int> class_labels, const CvOptions& options);

/// "split,score" rows followed by mean and std.
void write_cv_csv(const CvResult& result, const std::filesystem::path& path);

}  // namespace cfk
