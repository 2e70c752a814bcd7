#include <benchmark/benchmark.h>

#include <random>

#include "cfk/cross_validation.hpp"
#include "cfk/lasso.hpp"
#include "cfk/lda.hpp"
#include "cfk/nonparametric.hpp"
#include "cfk/pca.hpp"

using namespace cfk;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = g(rng);
  }
  return X;
}

void BM_PcaFit(benchmark::State& state) {
  const Eigen::MatrixXd X = gaussian(460, state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(pca_fit(X, 0.95));
}
BENCHMARK(BM_PcaFit)->Arg(54)->Arg(396)->Arg(1328);

void BM_LassoSolve(benchmark::State& state) {
  const Eigen::MatrixXd X = gaussian(400, state.range(0), 2);
  const Eigen::VectorXd y = X.col(0) - 0.5 * X.col(1) + 0.1 * gaussian(400, 1, 3).col(0);
  const double lambda = 0.05 * lasso_lambda_max(X, y);
  for (auto _ : state) benchmark::DoNotOptimize(lasso_solve(X, y, lambda));
}
BENCHMARK(BM_LassoSolve)->Arg(20)->Arg(100);

void BM_CrossValidate(benchmark::State& state) {
  Eigen::MatrixXd X = gaussian(460, 54, 4);
  Eigen::VectorXd y(460);
  for (Eigen::Index i = 0; i < 460; ++i) {
    y(i) = i % 2;
    X(i, 0) += y(i);
  }
  CvOptions o;
  o.repeats = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cross_validate(X, y, Task::Classify, o));
}
BENCHMARK(BM_CrossValidate)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_RankSum(benchmark::State& state) {
  std::vector<double> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = i % 3 != 0;
    b[i] = i % 5 != 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(rank_sum_test(a, b));
}
BENCHMARK(BM_RankSum)->Arg(5208);

}  // namespace

BENCHMARK_MAIN();
