#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "cfk/error.hpp"
#include "cfk/stats.hpp"
#include "fixtures.hpp"

using namespace cfk;

namespace {

ResponseRecord answer(const std::string& subject, const std::string& face, bool correct, std::size_t trial = 0) {
  ResponseRecord r;
  r.subject_id = subject;
  r.session_id = "ses-" + subject;
  r.face_id = face;
  r.choice = correct ? Choice::North : Choice::South;
  r.correct = correct;
  r.rt_ms = 900.0;
  r.trial_index = trial;
  return r;
}

std::string face_name(std::size_t i) { return "f" + std::to_string(1000 + i); }
std::string subject_name(std::size_t s) { return "s" + std::to_string(100 + s); }

}  // namespace

TEST_CASE("Spearman-Brown correction") {
  CHECK(spearman_brown(0.64) == doctest::Approx(2.0 * 0.64 / 1.64).epsilon(1e-15));
  CHECK(spearman_brown(0.64) == doctest::Approx(0.7805).epsilon(1e-4));
  CHECK(spearman_brown(1.0) == 1.0);
  CHECK(spearman_brown(0.0) == 0.0);
  double prev = spearman_brown(-0.99);
  for (double r = -0.98; r <= 1.0; r += 0.01) {
    CHECK(spearman_brown(r) > prev);
    prev = spearman_brown(r);
  }
}

TEST_CASE("Pearson correlation edge cases") {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1}, c{5, 5, 5, 5};
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(pearson(x, z) == doctest::Approx(-1.0));
  CHECK(pearson(x, c) == 0.0);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), Error);
  const std::vector<double> gappy{1, std::nan(""), 3, 4};
  CHECK(pearson_complete(gappy, y) == doctest::Approx(1.0));
  CHECK(pearson_p_value(0.0, 30) == doctest::Approx(1.0));
  CHECK(pearson_p_value(0.5, 30) < 0.01);
}

TEST_CASE("per-face accuracy: perfect faces, missing faces, timeouts, last response wins") {
  std::vector<ResponseRecord> rs;
  for (std::size_t s = 0; s < 10; ++s) rs.push_back(answer(subject_name(s), "perfect", true));
  ResponseRecord timeout = answer("s100", "mixed", false, 1);
  timeout.choice = Choice::Timeout;
  timeout.correct.reset();
  timeout.rt_ms = 5000;
  rs.push_back(timeout);
  rs.push_back(answer("s100", "mixed", false, 2));
  rs.push_back(answer("s100", "mixed", true, 3));  // re-presentation: last one counts
  rs.push_back(answer("s101", "mixed", false, 1));

  AccuracyOptions o;
  o.expected_faces = {"perfect", "mixed", "unseen"};
  const PerFaceAccuracy acc = per_face_accuracy(rs, o);
  CHECK(acc.faces.at("perfect").accuracy == 1.0);
  CHECK(acc.faces.at("perfect").n_responses == 10);
  CHECK(acc.faces.at("mixed").n_responses == 2);
  CHECK(acc.faces.at("mixed").accuracy == 0.5);
  CHECK(acc.faces.count("unseen") == 0);
  REQUIRE(acc.warnings.size() == 1);
  CHECK(acc.warnings[0].find("unseen") != std::string::npos);
  CHECK(acc.mean_accuracy() == doctest::Approx(0.75));
  const auto values = acc.values({"mixed", "unseen"});
  CHECK(values[0] == 0.5);
  CHECK(std::isnan(values[1]));
  CHECK(effective_responses(rs).size() == 12);
}

TEST_CASE("split-half reliability with duplicated subjects is perfect") {
  std::mt19937_64 rng(1);
  std::vector<ResponseRecord> rs;
  for (std::size_t f = 0; f < 50; ++f) {
    const bool c = rng() % 3 != 0;
    const bool d = rng() % 2 == 0;
    // Subjects s100/s101 answer identically, as do s102/s103.
    for (std::size_t s : {0u, 1u}) rs.push_back(answer(subject_name(s), face_name(f), c));
    for (std::size_t s : {2u, 3u}) rs.push_back(answer(subject_name(s), face_name(f), d));
  }
  const ReliabilityResult r = split_half_reliability(rs, SplitScheme::EvenOdd);
  CHECK(r.r == doctest::Approx(1.0));
  CHECK(r.rc == doctest::Approx(1.0));
  CHECK(r.n_faces == 50);
}

TEST_CASE("random split-half reliability matches the binomial-sampling closed form") {
  // Face i has latent accuracy p_i; every subject answers every face. With
  // S subjects the reliability of the per-face mean is
  // var(p) / (var(p) + E[p(1-p)] / S).
  const std::size_t n_faces = 600, n_subjects = 24;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n_faces);
  for (auto& v : p) v = 0.3 + 0.6 * u(rng);
  std::vector<ResponseRecord> rs;
  for (std::size_t s = 0; s < n_subjects; ++s) {
    for (std::size_t f = 0; f < n_faces; ++f) rs.push_back(answer(subject_name(s), face_name(f), u(rng) < p[f]));
  }
  double mean = 0, var = 0, noise = 0;
  for (double v : p) mean += v / n_faces;
  for (double v : p) {
    var += (v - mean) * (v - mean) / (n_faces - 1);
    noise += v * (1 - v) / n_faces;
  }
  const double analytic = var / (var + noise / n_subjects);
  const ReliabilityResult r = split_half_reliability(rs, SplitScheme::Random, 1000, 5);
  CHECK(r.n_draws == 1000);
  CHECK(std::fabs(r.rc - analytic) < 0.05);
  CHECK(r.rc == doctest::Approx(spearman_brown(r.r)));
}

TEST_CASE("bootstrap correlation with humans") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> acc(300), noise(300);
  for (auto& v : acc) v = 0.6 + 0.1 * g(rng);
  for (auto& v : noise) v = g(rng);
  const BootstrapCorrelation same = model_human_correlation(acc, acc, 1000, 1);
  CHECK(same.r == doctest::Approx(1.0));
  CHECK(same.sem < 1e-12);

  const BootstrapCorrelation none = model_human_correlation(noise, acc, 500, 1);
  CHECK(std::fabs(none.r) < 2.0 / std::sqrt(300.0));
  CHECK(none.sem > 0.0);
  CHECK(model_human_correlation(noise, acc, 500, 1, 3).sem == none.sem);

  // sem shrinks as predictions approach the targets.
  std::vector<double> close(acc);
  for (std::size_t i = 0; i < close.size(); ++i) close[i] += 1e-3 * noise[i];
  CHECK(model_human_correlation(close, acc, 500, 1).sem < 1e-4);
}

TEST_CASE("correlation matrix is symmetric with a unit diagonal") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> vs(4, std::vector<double>(80));
  for (std::size_t i = 0; i < 80; ++i) {
    const double common = g(rng);
    vs[0][i] = common + 0.3 * g(rng);
    vs[1][i] = common + 0.3 * g(rng);
    vs[2][i] = g(rng);
    vs[3][i] = 1.0;  // constant: reported as r = 0, p = 1
  }
  vs[2][5] = std::nan("");
  const CorrelationMatrix m = correlation_matrix({"a", "b", "c", "k"}, vs);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::fabs(m.r(i, i) - 1.0) < 1e-12);
    for (int j = 0; j < 4; ++j) CHECK(std::fabs(m.r(i, j) - m.r(j, i)) < 1e-12);
  }
  CHECK(m.significant(0, 1));
  CHECK_FALSE(m.significant(0, 0));
  CHECK(m.r(0, 3) == 0.0);
  CHECK(m.p(0, 3) == 1.0);

  fixtures::TempDir dir("corr");
  write_correlation_csv(m, dir / "c.csv");
  std::ifstream in(dir / "c.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.find("a") != std::string::npos);
}

TEST_CASE("pairwise agreement of correct-response patterns") {
  const std::vector<double> v{1, 0, 1, 1, 0, 0, 1, 0};
  std::vector<double> anti(v);
  for (double& x : anti) x = 1 - x;
  const AgreementResult same = pairwise_agreement({v, v}, {v, anti});
  CHECK(same.mean_a == doctest::Approx(1.0));
  CHECK(same.mean_b == doctest::Approx(-1.0));

  // NaN marks unseen items; pairs are correlated over shared items only.
  std::vector<double> gap(v);
  gap[0] = std::nan("");
  const AgreementResult g = pairwise_agreement({v, gap}, {v, v});
  CHECK(g.within_a.size() == 1);
  CHECK(g.within_a[0] == doctest::Approx(1.0));
}

TEST_CASE("part-prediction correlation") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t n = 400;
  std::vector<double> whole(n), rnd(n);
  for (auto& v : whole) v = g(rng);
  for (auto& v : rnd) v = g(rng);
  const auto out = part_prediction_correlation({{"SI", whole}}, {{"M", whole}, {"N", rnd}});
  REQUIRE(out.size() == 2);
  CHECK(out[0].part == "M");
  CHECK(out[0].r == doctest::Approx(1.0));
  CHECK(std::fabs(out[1].r) < 2.0 / std::sqrt(static_cast<double>(n)));
}
