#include "cfk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "cfk/error.hpp"
#include "cfk/parallel.hpp"
#include "cfk/rng.hpp"
#include "text_util.hpp"

namespace cfk {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::DimMismatch, "correlation of vectors with different lengths");
  if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "correlation needs at least 2 values");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson_complete(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::DimMismatch, "correlation of vectors with different lengths");
  std::vector<double> a, b;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i])) {
      a.push_back(x[i]);
      b.push_back(y[i]);
    }
  }
  if (a.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return pearson(a, b);
}

double pearson_p_value(double r, std::size_t n) {
  if (n < 3 || !std::isfinite(r)) return 1.0;
  if (std::abs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double spearman_brown(double r) {
  if (r <= -1.0) throw Error(ErrorCode::InvalidArgument, "Spearman-Brown is undefined for r <= -1");
  return 2.0 * r / (1.0 + r);
}

std::vector<ResponseRecord> effective_responses(std::span<const ResponseRecord> responses) {
  std::map<std::tuple<std::string, std::string, Condition>, std::size_t> last;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    const auto& r = responses[i];
    if (!r.answered() || !r.correct) continue;
    const auto key = std::make_tuple(r.subject_id.empty() ? r.session_id : r.subject_id, r.face_id, r.condition);
    const auto it = last.find(key);
    if (it == last.end() || responses[it->second].trial_index <= r.trial_index) last[key] = i;
  }
  std::vector<std::size_t> keep;
  for (const auto& [key, i] : last) keep.push_back(i);
  std::sort(keep.begin(), keep.end());
  std::vector<ResponseRecord> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(responses[i]);
  return out;
}

double PerFaceAccuracy::mean_accuracy() const {
  if (faces.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& [id, f] : faces) sum += f.accuracy;
  return sum / static_cast<double>(faces.size());
}

std::vector<double> PerFaceAccuracy::values(const std::vector<std::string>& face_ids) const {
  std::vector<double> out;
  out.reserve(face_ids.size());
  for (const auto& id : face_ids) {
    const auto it = faces.find(id);
    out.push_back(it == faces.end() ? std::numeric_limits<double>::quiet_NaN() : it->second.accuracy);
  }
  return out;
}

PerFaceAccuracy per_face_accuracy(std::span<const ResponseRecord> responses, const AccuracyOptions& options) {
  PerFaceAccuracy out;
  for (const auto& r : effective_responses(responses)) {
    if (options.condition && r.condition != *options.condition) continue;
    auto& f = out.faces[r.face_id];
    ++f.n_responses;
    if (*r.correct) ++f.n_correct;
  }
  for (auto& [id, f] : out.faces) f.accuracy = static_cast<double>(f.n_correct) / static_cast<double>(f.n_responses);
  for (const auto& id : options.expected_faces) {
    if (!out.faces.count(id)) out.warnings.push_back("face '" + id + "' has no answered trials; excluded");
  }
  return out;
}

namespace {

std::string subject_key(const ResponseRecord& r) { return r.subject_id.empty() ? r.session_id : r.subject_id; }

// Per-face accuracy of a subset of subjects, as (correct, total) per face.
double half_correlation(const std::vector<ResponseRecord>& eff, const std::set<std::string>& half_a,
                        std::size_t* n_faces) {
  std::map<std::string, std::array<std::size_t, 4>> tally;  // a_correct, a_total, b_correct, b_total
  for (const auto& r : eff) {
    auto& t = tally[r.face_id];
    const std::size_t off = half_a.count(subject_key(r)) ? 0 : 2;
    t[off] += *r.correct ? 1 : 0;
    t[off + 1] += 1;
  }
  std::vector<double> a, b;
  for (const auto& [id, t] : tally) {
    if (t[1] == 0 || t[3] == 0) continue;
    a.push_back(static_cast<double>(t[0]) / t[1]);
    b.push_back(static_cast<double>(t[2]) / t[3]);
  }
  if (n_faces) *n_faces = a.size();
  if (a.size() < 2) throw Error(ErrorCode::InvalidArgument, "too few faces answered by both halves");
  return pearson(a, b);
}

}  // namespace

ReliabilityResult split_half_reliability(std::span<const ResponseRecord> responses, SplitScheme scheme,
                                         std::size_t n_draws, std::uint64_t seed) {
  const std::vector<ResponseRecord> eff = effective_responses(responses);
  std::set<std::string> subject_set;
  for (const auto& r : eff) subject_set.insert(subject_key(r));
  const std::vector<std::string> subjects(subject_set.begin(), subject_set.end());
  if (subjects.size() < 2) throw Error(ErrorCode::InvalidArgument, "split-half reliability needs at least 2 subjects");

  ReliabilityResult result;
  if (scheme == SplitScheme::EvenOdd) {
    std::set<std::string> even;
    for (std::size_t i = 1; i < subjects.size(); i += 2) even.insert(subjects[i]);  // 1-based positions 2, 4, ...
    result.r = half_correlation(eff, even, &result.n_faces);
    result.n_draws = 1;
  } else {
    if (n_draws == 0) throw Error(ErrorCode::InvalidArgument, "n_draws must be positive");
    double sum = 0.0;
    std::vector<std::string> shuffled = subjects;
    for (std::size_t d = 0; d < n_draws; ++d) {
      Rng rng(derive_seed(seed, d));
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const std::set<std::string> half(shuffled.begin(), shuffled.begin() + static_cast<long>(shuffled.size() / 2));
      std::size_t faces = 0;
      sum += half_correlation(eff, half, &faces);
      result.n_faces = std::max(result.n_faces, faces);
    }
    result.r = sum / static_cast<double>(n_draws);
    result.n_draws = n_draws;
  }
  result.rc = spearman_brown(result.r);
  return result;
}

BootstrapCorrelation model_human_correlation(std::span<const double> predictions, std::span<const double> accuracy,
                                             std::size_t n_boot, std::uint64_t seed, int jobs) {
  BootstrapCorrelation out;
  out.r = pearson(predictions, accuracy);
  if (n_boot < 2) return out;
  const std::size_t n = predictions.size();
  std::vector<double> rs(n_boot);
  parallel_for(n_boot, jobs, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = pick(rng);
      x[i] = predictions[k];
      y[i] = accuracy[k];
    }
    rs[b] = pearson(x, y);
  });
  const double mean = std::accumulate(rs.begin(), rs.end(), 0.0) / static_cast<double>(n_boot);
  double ss = 0.0;
  for (double r : rs) ss += (r - mean) * (r - mean);
  out.sem = std::sqrt(ss / static_cast<double>(n_boot - 1));
  return out;
}

CorrelationMatrix correlation_matrix(const std::vector<std::string>& names,
                                     const std::vector<std::vector<double>>& vectors, double alpha) {
  if (names.size() != vectors.size()) throw Error(ErrorCode::DimMismatch, "names and vectors differ in count");
  const std::size_t k = vectors.size();
  CorrelationMatrix m;
  m.names = names;
  m.alpha = alpha;
  m.r = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  m.p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (vectors[i].size() != vectors[j].size()) throw Error(ErrorCode::DimMismatch, "vectors differ in length");
      std::size_t n = 0;
      for (std::size_t t = 0; t < vectors[i].size(); ++t) {
        if (std::isfinite(vectors[i][t]) && std::isfinite(vectors[j][t])) ++n;
      }
      double r = pearson_complete(vectors[i], vectors[j]);
      double p = pearson_p_value(r, n);
      if (!std::isfinite(r)) {
        r = 0.0;
        p = 1.0;
      }
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
      m.r(a, b) = m.r(b, a) = r;
      m.p(a, b) = m.p(b, a) = p;
    }
  }
  return m;
}

void write_correlation_csv(const CorrelationMatrix& m, const std::filesystem::path& path) {
  std::string out = "entity";
  for (const auto& n : m.names) out += "," + n;
  out += "\n";
  char buf[48];
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    out += m.names[i];
    for (std::size_t j = 0; j < m.names.size(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.6f%s", m.r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                    m.significant(i, j) ? "*" : "");
      out += buf;
    }
    out += "\n";
  }
  detail::write_text(path, out);
}

namespace {

std::vector<double> within(const std::vector<std::vector<double>>& group) {
  std::vector<double> rs;
  for (std::size_t i = 0; i < group.size(); ++i) {
    for (std::size_t j = i + 1; j < group.size(); ++j) {
      const double r = pearson_complete(group[i], group[j]);
      if (std::isfinite(r)) rs.push_back(r);
    }
  }
  return rs;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

AgreementResult pairwise_agreement(const std::vector<std::vector<double>>& group_a,
                                   const std::vector<std::vector<double>>& group_b) {
  AgreementResult out;
  out.within_a = within(group_a);
  out.within_b = within(group_b);
  out.mean_a = mean_of(out.within_a);
  out.mean_b = mean_of(out.within_b);
  if (!out.within_a.empty() && !out.within_b.empty()) out.comparison = rank_sum_test(out.within_a, out.within_b);
  return out;
}

std::vector<PartCorrelation> part_prediction_correlation(const std::map<std::string, std::vector<double>>& whole,
                                                         const std::map<std::string, std::vector<double>>& parts) {
  std::vector<PartCorrelation> out;
  for (const auto& [model, w] : whole) {
    for (const auto& [part, p] : parts) out.push_back({model, part, pearson(w, p)});
  }
  return out;
}

}  // namespace cfk
