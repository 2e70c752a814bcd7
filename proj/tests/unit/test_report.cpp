#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "cfk/error.hpp"
#include "cfk/report.hpp"
#include "fixtures.hpp"

using namespace cfk;

namespace {

ModelScore score(const std::string& name, double level, std::size_t dims = 10) {
  ModelScore s;
  s.name = name;
  s.dims = dims;
  s.n_faces = 460;
  s.df = 7.5;
  s.mean = level;
  s.std = 0.02;
  for (int i = 0; i < 100; ++i) s.per_split.push_back(level + 0.001 * (i % 5));
  return s;
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::size_t count_fields(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

AnalysisSummary sample_summary() {
  AnalysisSummary s;
  s.n_faces = 460;
  s.n_subjects = 24;
  s.human_mean_accuracy = 0.636;
  s.reliability = ReliabilityResult{0.64, spearman_brown(0.64), 460, 100};
  ModelScore human = score("Humans", 0.636, 0);
  human.reference = true;
  s.classification.push_back({"race", "accuracy", rank_models({score("S", 0.6), score("SI", 0.63), human})});
  s.attributes.push_back({"age", "corr", rank_models({score("S", 0.3), score("SI", 0.5)})});
  OcclusionAnalysis occ;
  occ.all[0] = {100, 65, 0.65, 900.0, 880.0};
  occ.comparisons.push_back({Condition::None, Condition::Mouth, {120.0, 0.0004, 3.5, false}});
  s.occlusion = occ;
  return s;
}

}  // namespace

TEST_CASE("paired split comparison") {
  const std::vector<double> a(100, 0.5), b(100, 0.6);
  const ModelComparison c = compare_scores(a, b);
  CHECK(c.a_below_b == 100);
  CHECK(c.splits == 100);
  CHECK(c.significant);
  CHECK_FALSE(compare_scores(b, a).significant);
  std::vector<double> mixed(b);
  for (int i = 0; i < 5; ++i) mixed[i] = 0.4;
  CHECK(compare_scores(a, mixed).a_below_b == 95);
  CHECK_FALSE(compare_scores(a, mixed).significant);  // strictly more than 95%
}

TEST_CASE("ranking orders by mean and flags models below the best") {
  ModelScore human = score("Humans", 0.99, 0);
  human.reference = true;
  ModelScore close = score("C", 0.70);
  close.per_split[0] = 0.9;  // beats the best in a few splits
  close.per_split[1] = 0.9;
  close.per_split[2] = 0.9;
  close.per_split[3] = 0.9;
  close.per_split[4] = 0.9;
  const auto ranked = rank_models({score("A", 0.6), score("B", 0.8), human, close, score("A2", 0.6)});
  REQUIRE(ranked.size() == 5);
  std::map<std::string, RankedScore> by;
  for (const auto& r : ranked) by[r.score.name] = r;
  CHECK(by["B"].rank == 1);
  CHECK_FALSE(by["B"].below_best);
  CHECK(by["C"].rank == 2);
  CHECK_FALSE(by["C"].below_best);
  CHECK(by["A"].rank == 3);
  CHECK(by["A2"].rank == 4);  // tie broken by name
  CHECK(by["A"].below_best);
  CHECK(by["Humans"].rank == 0);
  CHECK_FALSE(by["Humans"].below_best);
}

TEST_CASE("score table CSV layout") {
  fixtures::TempDir dir("report");
  const AnalysisSummary s = sample_summary();
  std::vector<ScoreColumn> cols = s.classification;
  cols.push_back(s.attributes[0]);
  write_score_table_csv(cols, dir / "t.csv");
  const auto lines = lines_of(dir / "t.csv");
  REQUIRE(lines.size() == 2 + 3);
  CHECK(lines[0].rfind("model,dims,race_df,race_accuracy_mean", 0) == 0);
  CHECK(lines[0].find("age_corr_mean") != std::string::npos);
  CHECK(lines[1].rfind("#faces,,,460", 0) == 0);
  for (const auto& l : lines) CHECK(count_fields(l) == 2 + 5 * 2);
  // The reference row has no df, no rank and no age entry.
  bool found = false;
  for (const auto& l : lines) {
    if (l.rfind("Humans,", 0) == 0) {
      found = true;
      CHECK(l.find(",,,,,") != std::string::npos);
    }
  }
  CHECK(found);
}

TEST_CASE("model score and analysis summary JSON round trip") {
  const ModelScore m = score("ENMC", 0.61, 396);
  const ModelScore back = model_score_from_json(to_json(m));
  CHECK(back.name == m.name);
  CHECK(back.dims == 396);
  CHECK(back.per_split == m.per_split);
  CHECK(back.reference == m.reference);

  const AnalysisSummary s = sample_summary();
  const nlohmann::json j = to_json(s);
  const AnalysisSummary t = analysis_summary_from_json(j);
  CHECK(to_json(t) == j);
  CHECK(t.reliability->rc == s.reliability->rc);
  REQUIRE(t.occlusion.has_value());
  CHECK(t.occlusion->comparisons[0].b == Condition::Mouth);
  CHECK_THROWS_AS(analysis_summary_from_json(nlohmann::json{{"classification", {{{"task", "x"}}}}}), Error);
}

TEST_CASE("markdown rendering") {
  const std::string md = render_markdown(sample_summary());
  CHECK(md.find("# Analysis summary") != std::string::npos);
  CHECK(md.find("Human mean accuracy: 63.6%") != std::string::npos);
  CHECK(md.find("## Race classification") != std::string::npos);
  CHECK(md.find("## Occlusion") != std::string::npos);
  CHECK(md.find("none vs mouth") != std::string::npos);
  CHECK(md.find("0.0004") != std::string::npos);
}

TEST_CASE("write_report requires the analysis outputs") {
  fixtures::TempDir dir("report-in");
  try {
    write_report(dir.path(), dir / "report.md");
    FAIL("expected MissingInputs");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingInputs);
    for (const auto& name : report_inputs()) CHECK(std::string(e.what()).find(name) != std::string::npos);
  }
  CHECK_FALSE(std::filesystem::exists(dir / "report.md"));

  std::ofstream(dir / "summary.json") << to_json(sample_summary()).dump();
  std::ofstream(dir / "table_race.csv") << "model\n";
  std::ofstream(dir / "table_attributes.csv") << "model\n";
  write_report(dir.path(), dir / "report.md");
  std::ifstream in(dir / "report.md");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == render_markdown(sample_summary()));
}
