#pragma once

#include <span>
#include <vector>

namespace cfk {

enum class PMethod { Auto, Exact, Normal };

struct TestResult {
  double statistic = 0.0;  // U for the rank-sum test, W+ for the signed-rank test
  double p_value = 1.0;    // two-sided
  double z = 0.0;          // continuity-corrected standardized statistic (0 for exact results)
  bool exact = false;
};

/// Mann-Whitney U / Wilcoxon rank-sum test of x against y with midranks for
/// ties. Auto uses the exact permutation distribution of the (midrank) rank
/// sum when min(nx, ny) <= 8 and nx + ny <= 400; otherwise a normal
/// approximation with 0.5 continuity correction, tie-corrected variance and an
/// Edgeworth (fourth-cumulant) correction. U counts pairs with x > y (ties 1/2).
/// Throws InvalidArgument when a sample is empty or non-finite.
TestResult rank_sum_test(std::span<const double> x, std::span<const double> y, PMethod method = PMethod::Auto);

/// Wilcoxon signed-rank test of x - mu0 = 0: zero differences are dropped,
/// tied |differences| get midranks. Auto is exact (all 2^n sign patterns)
/// when n <= 12 after dropping zeros, otherwise the same corrected normal
/// approximation. W+ is the rank sum of positive differences.
TestResult sign_rank_test(std::span<const double> x, double mu0, PMethod method = PMethod::Auto);

/// Midranks (1-based) of a sample.
std::vector<double> midranks(std::span<const double> values);

}  // namespace cfk
