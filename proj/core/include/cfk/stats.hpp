#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfk/nonparametric.hpp"
#include "cfk/responses.hpp"

namespace cfk {

/// Pearson correlation. Returns 0 when either vector has zero variance.
/// Throws DimMismatch for unequal lengths, InvalidArgument for fewer than 2 values.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson over positions where both values are finite (NaN marks "missing").
/// Returns NaN when fewer than 2 such positions remain.
double pearson_complete(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value of r under H0: rho = 0 (t with n-2 degrees of freedom).
double pearson_p_value(double r, std::size_t n);

/// rc = 2r / (1 + r).
double spearman_brown(double r);

/// Keeps answered trials only and, per (subject, face, condition), the last
/// one in trial order.
std::vector<ResponseRecord> effective_responses(std::span<const ResponseRecord> responses);

struct FaceAccuracy {
  std::size_t n_responses = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
};

struct PerFaceAccuracy {
  std::map<std::string, FaceAccuracy> faces;
  std::vector<std::string> warnings;

  double mean_accuracy() const;
  /// Accuracy per id (NaN for faces without responses).
  std::vector<double> values(const std::vector<std::string>& face_ids) const;
};

struct AccuracyOptions {
  std::optional<Condition> condition;      // restrict to one condition
  std::vector<std::string> expected_faces; // warn about those without any answered trial
};

/// Fraction correct per face over effective (answered, deduplicated) trials.
PerFaceAccuracy per_face_accuracy(std::span<const ResponseRecord> responses, const AccuracyOptions& options = {});

enum class SplitScheme { EvenOdd, Random };

struct ReliabilityResult {
  double r = 0.0;   // split-half correlation (mean over draws for the random scheme)
  double rc = 0.0;  // spearman_brown(r)
  std::size_t n_faces = 0;
  std::size_t n_draws = 0;
};

/// Subjects are ordered by subject_id. EvenOdd compares the per-face accuracy
/// of subjects at even 1-based positions with the odd ones; Random averages r
/// over `n_draws` random halvings. Faces need an answered trial in both halves.
ReliabilityResult split_half_reliability(std::span<const ResponseRecord> responses, SplitScheme scheme,
                                         std::size_t n_draws = 1000, std::uint64_t seed = 1);

struct BootstrapCorrelation {
  double r = 0.0;
  double sem = 0.0;  // standard deviation of r over resamples of faces
};

BootstrapCorrelation model_human_correlation(std::span<const double> predictions, std::span<const double> accuracy,
                                             std::size_t n_boot = 1000, std::uint64_t seed = 1, int jobs = 1);

struct CorrelationMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd r;  // symmetric, unit diagonal
  Eigen::MatrixXd p;  // two-sided p-values (0 on the diagonal)
  double alpha = 0.05;

  bool significant(std::size_t i, std::size_t j) const { return i != j && p(i, j) < alpha; }
};

/// Pairwise Pearson correlations (complete cases) with t-test p-values.
/// Undefined correlations (constant vectors) are reported as r = 0, p = 1.
CorrelationMatrix correlation_matrix(const std::vector<std::string>& names,
                                     const std::vector<std::vector<double>>& vectors, double alpha = 0.05);

void write_correlation_csv(const CorrelationMatrix& m, const std::filesystem::path& path);

struct AgreementResult {
  std::vector<double> within_a;  // r for every pair in group a
  std::vector<double> within_b;
  double mean_a = 0.0;
  double mean_b = 0.0;
  TestResult comparison;  // rank-sum of within_a against within_b
};

/// Mean pairwise agreement of correct-response patterns inside two groups
/// (e.g. human subjects vs models). NaN entries mark items an entity did not
/// see; each pair is correlated over items both saw. Pairs with an undefined
/// correlation are skipped.
AgreementResult pairwise_agreement(const std::vector<std::vector<double>>& group_a,
                                   const std::vector<std::vector<double>>& group_b);

struct PartCorrelation {
  std::string model;
  std::string part;
  double r = 0.0;
};

/// Pearson r between each whole-face model's out-of-fold predictions and each
/// part model's, in map order (model-major).
std::vector<PartCorrelation> part_prediction_correlation(const std::map<std::string, std::vector<double>>& whole,
                                                         const std::map<std::string, std::vector<double>>& parts);

}  // namespace cfk
