#include "cfk/cross_validation.hpp"

#include <cmath>
#include <numeric>

#include "cfk/dataset.hpp"
#include "cfk/error.hpp"
#include "cfk/parallel.hpp"
#include "cfk/rng.hpp"
#include "cfk/stats.hpp"
#include "text_util.hpp"

namespace cfk {

std::string_view to_string(Task t) noexcept { return t == Task::Classify ? "classify" : "regress"; }

double FoldModel::score(const Eigen::VectorXd& x) const {
  if (degenerate) return task == Task::Classify ? (fallback > 0.5 ? 1.0 : -1.0) : fallback;
  const Eigen::VectorXd z = pca.transform(x);
  return task == Task::Classify ? lda.decision(z) : lasso.predict(z);
}

double FoldModel::predict(const Eigen::VectorXd& x) const {
  if (degenerate) return fallback;
  const double s = score(x);
  return task == Task::Classify ? static_cast<double>(lda.label_for(s)) : s;
}

FoldModel fit_fold_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task, const CvOptions& options,
                         std::uint64_t seed) {
  FoldModel m;
  m.task = task;
  if (task == Task::Classify) {
    std::size_t ones = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) ones += y(i) == 1.0 ? 1 : 0;
    m.fallback = 2 * ones > static_cast<std::size_t>(y.size()) ? 1.0 : 0.0;
  } else {
    m.fallback = y.mean();
  }
  try {
    m.pca = pca_fit(X, options.variance_target);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroVariance) throw;
    m.degenerate = true;
    return m;
  }
  const Eigen::MatrixXd Z = m.pca.transform(X);
  if (task == Task::Classify) {
    std::vector<int> labels(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(y(i));
    m.lda = lda_fit(Z, labels, options.lda);
  } else {
    LassoOptions lo = options.lasso;
    lo.seed = seed;
    m.lasso = lasso_fit(Z, y, lo);
  }
  return m;
}

std::vector<int> split_folds(const Eigen::VectorXd& y, Task task, int k, std::uint64_t seed) {
  if (task == Task::Classify) {
    std::vector<int> labels(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(y(i));
    return stratified_folds(labels, k, seed);
  }
  return random_folds(static_cast<std::size_t>(y.size()), k, seed);
}

namespace {

void check_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task) {
  if (X.rows() != y.size()) throw Error(ErrorCode::DimMismatch, "feature rows and targets differ");
  if (!X.allFinite() || !y.allFinite()) throw Error(ErrorCode::NonFinite, "non-finite features or targets");
  if (task == Task::Classify) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y(i) != 0.0 && y(i) != 1.0) throw Error(ErrorCode::InvalidArgument, "classification targets must be 0 or 1");
    }
  }
}

std::vector<Eigen::Index> rows_where(const std::vector<int>& folds, int f, bool in_fold) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    if ((folds[i] == f) == in_fold) rows.push_back(static_cast<Eigen::Index>(i));
  }
  return rows;
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t split, int fold) {
  return derive_seed(derive_seed(seed, 0x5eedULL + split), static_cast<std::uint64_t>(fold));
}

struct SplitOutcome {
  std::vector<double> predictions, scores;
  double score = 0.0;
  double retained = 0.0;
};

SplitOutcome run_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task, const CvOptions& options,
                       std::size_t split) {
  const std::vector<int> folds = split_folds(y, task, options.k, derive_seed(options.seed, split));
  SplitOutcome out;
  out.predictions.assign(static_cast<std::size_t>(y.size()), 0.0);
  out.scores.assign(static_cast<std::size_t>(y.size()), 0.0);
  double accuracy_sum = 0.0;
  for (int f = 0; f < options.k; ++f) {
    const auto train = rows_where(folds, f, false);
    const auto test = rows_where(folds, f, true);
    const FoldModel model = fit_fold_model(X(train, Eigen::all), y(train), task, options, fold_seed(options.seed, split, f));
    out.retained += static_cast<double>(model.degenerate ? 0 : model.pca.retained);
    std::size_t correct = 0;
    for (Eigen::Index i : test) {
      const Eigen::VectorXd x = X.row(i).transpose();
      const double s = model.score(x);
      const double p = model.degenerate ? model.fallback
                                        : (task == Task::Classify ? static_cast<double>(model.lda.label_for(s)) : s);
      out.scores[static_cast<std::size_t>(i)] = s;
      out.predictions[static_cast<std::size_t>(i)] = p;
      if (p == y(i)) ++correct;
    }
    if (!test.empty()) accuracy_sum += static_cast<double>(correct) / static_cast<double>(test.size());
  }
  out.retained /= options.k;
  if (task == Task::Classify) {
    out.score = accuracy_sum / options.k;
  } else {
    out.score = pearson(out.predictions, std::vector<double>(y.data(), y.data() + y.size()));
  }
  return out;
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

std::vector<double> column_mean(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  std::vector<double> out(rows.front().size(), 0.0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out[i] += r[i];
  }
  for (double& v : out) v /= static_cast<double>(rows.size());
  return out;
}

}  // namespace

std::vector<FoldModel> fit_fold_models(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task,
                                       const std::vector<int>& folds, const CvOptions& options, std::uint64_t seed) {
  check_inputs(X, y, task);
  if (folds.size() != static_cast<std::size_t>(y.size())) throw Error(ErrorCode::DimMismatch, "fold labels and rows differ");
  const int k = folds.empty() ? 0 : *std::max_element(folds.begin(), folds.end()) + 1;
  std::vector<FoldModel> models;
  for (int f = 0; f < k; ++f) {
    const auto train = rows_where(folds, f, false);
    models.push_back(fit_fold_model(X(train, Eigen::all), y(train), task, options, derive_seed(seed, static_cast<std::uint64_t>(f))));
  }
  return models;
}

std::vector<double> CvResult::mean_prediction() const { return column_mean(predictions); }
std::vector<double> CvResult::mean_score() const { return column_mean(scores); }

CvResult cross_validate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Task task, const CvOptions& options) {
  check_inputs(X, y, task);
  if (options.k < 2) throw Error(ErrorCode::InvalidArgument, "k must be at least 2");
  if (options.repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be at least 1");
  if (y.size() < options.k) throw Error(ErrorCode::TooFewFaces, "fewer rows than folds");
  const auto repeats = static_cast<std::size_t>(options.repeats);
  std::vector<SplitOutcome> outcomes(repeats);
  parallel_for(repeats, options.jobs, [&](std::size_t s) { outcomes[s] = run_split(X, y, task, options, s); });

  CvResult result;
  result.task = task;
  result.k = options.k;
  result.repeats = options.repeats;
  result.seed = options.seed;
  double retained = 0.0;
  for (auto& o : outcomes) {
    result.per_split_score.push_back(o.score);
    result.predictions.push_back(std::move(o.predictions));
    result.scores.push_back(std::move(o.scores));
    retained += o.retained;
  }
  result.mean_retained = retained / static_cast<double>(repeats);
  mean_std(result.per_split_score, result.mean, result.std);
  return result;
}

ModelComparison compare_models(const CvResult& a, const CvResult& b) {
  if (a.per_split_score.size() != b.per_split_score.size()) {
    throw Error(ErrorCode::DimMismatch, "compared results have different split counts");
  }
  ModelComparison c;
  c.splits = a.per_split_score.size();
  for (std::size_t s = 0; s < c.splits; ++s) {
    if (a.per_split_score[s] < b.per_split_score[s]) ++c.a_below_b;
  }
  c.significant = static_cast<double>(c.a_below_b) > 0.95 * static_cast<double>(c.splits);
  return c;
}

std::vector<double> HumanAccuracyPrediction::mean_prediction() const { return column_mean(predictions); }

HumanAccuracyPrediction predict_human_accuracy(const Eigen::MatrixXd& X, const Eigen::VectorXd& accuracy,
                                               std::span<const int> class_labels, const CvOptions& options) {
  check_inputs(X, accuracy, Task::Regress);
  if (class_labels.size() != static_cast<std::size_t>(accuracy.size())) {
    throw Error(ErrorCode::DimMismatch, "class labels and rows differ");
  }
  std::array<std::vector<Eigen::Index>, 2> members;
  for (std::size_t i = 0; i < class_labels.size(); ++i) {
    if (class_labels[i] != 0 && class_labels[i] != 1) throw Error(ErrorCode::InvalidArgument, "class labels must be 0 or 1");
    members[static_cast<std::size_t>(class_labels[i])].push_back(static_cast<Eigen::Index>(i));
  }
  for (const auto& m : members) {
    if (static_cast<int>(m.size()) < options.k) throw Error(ErrorCode::TooFewFaces, "a class has fewer faces than folds");
  }

  const auto repeats = static_cast<std::size_t>(options.repeats);
  HumanAccuracyPrediction out;
  out.predictions.assign(repeats, std::vector<double>(static_cast<std::size_t>(accuracy.size()), 0.0));
  out.per_split_r.assign(repeats, 0.0);
  parallel_for(repeats, options.jobs, [&](std::size_t s) {
    for (std::size_t c = 0; c < 2; ++c) {
      const auto& rows = members[c];
      const Eigen::MatrixXd Xc = X(rows, Eigen::all);
      const Eigen::VectorXd yc = accuracy(rows);
      const std::vector<int> folds = random_folds(rows.size(), options.k, derive_seed(options.seed, 2 * s + c));
      for (int f = 0; f < options.k; ++f) {
        const auto train = rows_where(folds, f, false);
        const auto test = rows_where(folds, f, true);
        const FoldModel model = fit_fold_model(Xc(train, Eigen::all), yc(train), Task::Regress, options,
                                               fold_seed(options.seed, 2 * s + c, f));
        for (Eigen::Index i : test) {
          out.predictions[s][static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])] =
              model.predict(Xc.row(i).transpose());
        }
      }
    }
    out.per_split_r[s] = pearson(out.predictions[s], std::vector<double>(accuracy.data(), accuracy.data() + accuracy.size()));
  });
  mean_std(out.per_split_r, out.mean_r, out.std_r);
  return out;
}

void write_cv_csv(const CvResult& result, const std::filesystem::path& path) {
  std::string out = "split,score\n";
  char buf[64];
  for (std::size_t s = 0; s < result.per_split_score.size(); ++s) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g\n", s, result.per_split_score[s]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "mean,%.10g\nstd,%.10g\n", result.mean, result.std);
  out += buf;
  detail::write_text(path, out);
}

}  // namespace cfk
