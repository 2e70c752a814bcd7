#include "cfk/nonparametric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "cfk/error.hpp"

namespace cfk {

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

void check_sample(std::span<const double> s, const char* what) {
  if (s.empty()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is empty");
  for (double v : s) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " has a non-finite value");
  }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Two-sided p from the deviation |d| of a statistic from its mean, with
// continuity correction and a kurtosis (Edgeworth) correction to the normal.
TestResult corrected_normal(double statistic, double deviation, double variance, double kappa4) {
  TestResult r;
  r.statistic = statistic;
  if (!(variance > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double sd = std::sqrt(variance);
  const double dev = std::max(std::abs(deviation) - 0.5, 0.0);
  const double z = dev / sd;
  const double gamma2 = kappa4 / (variance * variance);
  const double upper = 1.0 - normal_cdf(z) + normal_pdf(z) * (gamma2 / 24.0) * (z * z * z - 3.0 * z);
  r.z = deviation >= 0 ? z : -z;
  r.p_value = std::clamp(2.0 * upper, 0.0, 1.0);
  return r;
}

}  // namespace

TestResult rank_sum_test(std::span<const double> x, std::span<const double> y, PMethod method) {
  check_sample(x, "first sample");
  check_sample(y, "second sample");
  const std::size_t nx = x.size(), ny = y.size(), n = nx + ny;
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const std::vector<double> ranks = midranks(pooled);
  double w = 0.0;
  for (std::size_t i = 0; i < nx; ++i) w += ranks[i];
  const double u = w - static_cast<double>(nx) * (nx + 1) / 2.0;
  const double mean_w = static_cast<double>(nx) * (n + 1) / 2.0;

  const bool exact = method == PMethod::Exact ||
                     (method == PMethod::Auto && std::min(nx, ny) <= 8 && n <= 400);
  if (exact) {
    // Distribution of the sum of nx ranks drawn without replacement; doubled
    // midranks are integers. Count subsets by DP over (size, sum).
    const std::size_t m = std::min(nx, ny);
    const bool use_x = nx <= ny;
    std::vector<long> doubled(n);
    for (std::size_t i = 0; i < n; ++i) doubled[i] = std::lround(2.0 * ranks[i]);
    long max_sum = 0;
    {
      std::vector<long> sorted = doubled;
      std::sort(sorted.rbegin(), sorted.rend());
      for (std::size_t i = 0; i < m; ++i) max_sum += sorted[i];
    }
    // counts[k][s]: number of k-subsets with doubled rank sum s.
    std::vector<std::vector<long double>> counts(m + 1, std::vector<long double>(static_cast<std::size_t>(max_sum) + 1, 0.0L));
    counts[0][0] = 1.0L;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = std::min(m, i + 1); k >= 1; --k) {
        auto& dst = counts[k];
        const auto& src = counts[k - 1];
        for (long s = max_sum - doubled[i]; s >= 0; --s) {
          if (src[static_cast<std::size_t>(s)] != 0.0L) dst[static_cast<std::size_t>(s + doubled[i])] += src[static_cast<std::size_t>(s)];
        }
      }
    }
    long observed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if ((i < nx) == use_x) observed += doubled[i];
    }
    // Compare |2*sum - 2*mean| on the doubled scale: 2*mean = m*(n+1).
    const long double center2 = static_cast<long double>(m) * (n + 1);
    const long double obs_dev = std::fabs(static_cast<long double>(observed) - center2);
    long double tail = 0.0L, all = 0.0L;
    for (long s = 0; s <= max_sum; ++s) {
      const long double c = counts[m][static_cast<std::size_t>(s)];
      if (c == 0.0L) continue;
      all += c;
      if (std::fabs(static_cast<long double>(s) - center2) >= obs_dev - 1e-9L) tail += c;
    }
    TestResult r;
    r.statistic = u;
    r.exact = true;
    r.p_value = std::min(1.0, static_cast<double>(tail / all));
    return r;
  }

  // Finite-population moments of the rank sum of nx draws without replacement.
  const double N = static_cast<double>(n);
  double s2 = 0.0, s4 = 0.0;
  const double rbar = (N + 1.0) / 2.0;
  for (double r : ranks) {
    const double d = r - rbar;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  s2 /= N;
  s4 /= N;
  const double k = static_cast<double>(nx);
  // p_j = k(k-1)...(k-j+1) / (N(N-1)...(N-j+1)); the second and fourth
  // central moments of a without-replacement sum follow from expanding the
  // power sums over distinct index tuples.
  auto falling = [](double a, int j) {
    double v = 1.0;
    for (int i = 0; i < j; ++i) v *= (a - i);
    return v;
  };
  const double p1 = falling(k, 1) / falling(N, 1);
  const double p2 = N >= 2 ? falling(k, 2) / falling(N, 2) : 0.0;
  const double p3 = N >= 3 ? falling(k, 3) / falling(N, 3) : 0.0;
  const double p4 = N >= 4 ? falling(k, 4) / falling(N, 4) : 0.0;
  // With population sums S2 = N*s2, S4 = N*s4 of centered ranks (sum zero).
  const double S2 = N * s2, S4 = N * s4;
  const double m2 = p1 * S2 - p2 * S2;
  const double m4 = p1 * S4 - 4.0 * p2 * S4 + 3.0 * p2 * (S2 * S2 - S4) + 6.0 * p3 * (2.0 * S4 - S2 * S2) +
                    p4 * (3.0 * S2 * S2 - 6.0 * S4);
  const double kappa4 = m4 - 3.0 * m2 * m2;
  return corrected_normal(u, w - mean_w, m2, kappa4);
}

TestResult sign_rank_test(std::span<const double> x, double mu0, PMethod method) {
  check_sample(x, "sample");
  if (!std::isfinite(mu0)) throw Error(ErrorCode::InvalidArgument, "mu0 must be finite");
  std::vector<double> diffs;
  for (double v : x) {
    if (v != mu0) diffs.push_back(v - mu0);
  }
  TestResult result;
  const std::size_t n = diffs.size();
  if (n == 0) {
    result.exact = true;
    return result;
  }
  std::vector<double> magnitudes(n);
  for (std::size_t i = 0; i < n; ++i) magnitudes[i] = std::abs(diffs[i]);
  const std::vector<double> ranks = midranks(magnitudes);
  double w_plus = 0.0, total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += ranks[i];
    if (diffs[i] > 0) w_plus += ranks[i];
  }
  const double mean = total / 2.0;

  const bool exact = method == PMethod::Exact || (method == PMethod::Auto && n <= 12);
  if (exact) {
    if (n > 24) throw Error(ErrorCode::InvalidArgument, "exact signed-rank enumeration is limited to n <= 24");
    std::vector<long> doubled(n);
    long sum2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      doubled[i] = std::lround(2.0 * ranks[i]);
      sum2 += doubled[i];
    }
    // Distribution of the doubled positive-rank sum over all sign patterns.
    std::vector<double> counts(static_cast<std::size_t>(sum2) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      reach += doubled[i];
      for (long s = reach; s >= doubled[i]; --s) counts[static_cast<std::size_t>(s)] += counts[static_cast<std::size_t>(s - doubled[i])];
    }
    const double center2 = static_cast<double>(sum2) / 2.0;
    const double dev = std::abs(2.0 * w_plus - center2);
    double tail = 0.0;
    for (long s = 0; s <= sum2; ++s) {
      if (std::abs(static_cast<double>(s) - center2) >= dev - 1e-9) tail += counts[static_cast<std::size_t>(s)];
    }
    result.statistic = w_plus;
    result.exact = true;
    result.p_value = std::min(1.0, tail / std::ldexp(1.0, static_cast<int>(n)));
    return result;
  }
  double var = 0.0, fourth = 0.0;
  for (double r : ranks) {
    var += r * r;
    fourth += r * r * r * r;
  }
  var /= 4.0;
  const double kappa4 = -fourth / 8.0;
  return corrected_normal(w_plus, w_plus - mean, var, kappa4);
}

}  // namespace cfk
