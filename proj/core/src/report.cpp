#include "cfk/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "cfk/error.hpp"
#include "text_util.hpp"

namespace cfk {

nlohmann::json to_json(const ModelScore& s) {
  return {{"name", s.name}, {"dims", s.dims},         {"n_faces", s.n_faces},     {"df", s.df},
          {"mean", s.mean}, {"std", s.std},           {"per_split", s.per_split}, {"reference", s.reference}};
}

ModelScore model_score_from_json(const nlohmann::json& j) {
  try {
    ModelScore s;
    s.name = j.at("name").get<std::string>();
    s.dims = j.value("dims", std::size_t{0});
    s.n_faces = j.value("n_faces", std::size_t{0});
    s.df = j.value("df", 0.0);
    s.mean = j.at("mean").get<double>();
    s.std = j.value("std", 0.0);
    s.per_split = j.value("per_split", std::vector<double>{});
    s.reference = j.value("reference", false);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("model score: ") + e.what());
  }
}

ModelComparison compare_scores(std::span<const double> a, std::span<const double> b) {
  ModelComparison c;
  c.splits = std::min(a.size(), b.size());
  for (std::size_t s = 0; s < c.splits; ++s) {
    if (a[s] < b[s]) ++c.a_below_b;
  }
  c.significant = c.splits > 0 && static_cast<double>(c.a_below_b) > 0.95 * static_cast<double>(c.splits);
  return c;
}

std::vector<RankedScore> rank_models(std::vector<ModelScore> scores) {
  std::vector<RankedScore> out;
  std::vector<ModelScore> ranked, reference;
  for (auto& s : scores) (s.reference ? reference : ranked).push_back(std::move(s));
  std::stable_sort(ranked.begin(), ranked.end(), [](const ModelScore& a, const ModelScore& b) {
    if (a.mean != b.mean) return a.mean > b.mean;
    return a.name < b.name;
  });
  for (auto& s : reference) out.push_back({std::move(s), 0, false});
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    RankedScore r{ranked[i], static_cast<int>(i + 1), false};
    if (i > 0) r.below_best = compare_scores(ranked[i].per_split, ranked[0].per_split).significant;
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

void write_score_table_csv(const std::vector<ScoreColumn>& columns, const std::filesystem::path& path) {
  std::vector<std::string> order;
  std::map<std::string, std::size_t> dims;
  for (const auto& col : columns) {
    for (const auto& r : col.rows) {
      if (std::find(order.begin(), order.end(), r.score.name) == order.end()) order.push_back(r.score.name);
      if (r.score.dims > 0) dims[r.score.name] = r.score.dims;
    }
  }
  std::ostringstream out;
  out << "model,dims";
  for (const auto& col : columns) {
    const std::string p = col.task + "_";
    out << ',' << p << "df," << p << col.metric << "_mean," << p << col.metric << "_std," << p << "below_best," << p
        << "rank";
  }
  out << '\n' << "#faces,";
  for (const auto& col : columns) {
    std::size_t n = 0;
    for (const auto& r : col.rows) n = std::max(n, r.score.n_faces);
    out << ",," << n << ",,,";
  }
  out << '\n';
  for (const auto& name : order) {
    out << name << ',';
    if (dims.count(name)) out << dims[name];
    for (const auto& col : columns) {
      const auto it = std::find_if(col.rows.begin(), col.rows.end(),
                                   [&](const RankedScore& r) { return r.score.name == name; });
      if (it == col.rows.end()) {
        out << ",,,,,";
        continue;
      }
      out << ',' << (it->score.reference ? std::string() : fmt(it->score.df, 1)) << ',' << fmt(it->score.mean) << ','
          << fmt(it->score.std) << ',' << (it->below_best ? "*" : "") << ',';
      if (it->rank > 0) out << it->rank;
    }
    out << '\n';
  }
  detail::write_text(path, out.str());
}

namespace {

nlohmann::json to_json(const ConditionSummary& s) {
  return {{"n_trials", s.n_trials},     {"n_correct", s.n_correct},       {"accuracy", s.accuracy},
          {"mean_rt_ms", s.mean_rt_ms}, {"median_rt_ms", s.median_rt_ms}};
}

ConditionSummary condition_summary_from_json(const nlohmann::json& j) {
  ConditionSummary s;
  s.n_trials = j.at("n_trials").get<std::size_t>();
  s.n_correct = j.at("n_correct").get<std::size_t>();
  s.accuracy = j.at("accuracy").get<double>();
  s.mean_rt_ms = j.at("mean_rt_ms").get<double>();
  s.median_rt_ms = j.at("median_rt_ms").get<double>();
  return s;
}

nlohmann::json to_json(const TestResult& t) {
  return {{"statistic", t.statistic}, {"p_value", t.p_value}, {"z", t.z}, {"exact", t.exact}};
}

TestResult test_result_from_json(const nlohmann::json& j) {
  TestResult t;
  t.statistic = j.at("statistic").get<double>();
  t.p_value = j.at("p_value").get<double>();
  t.z = j.value("z", 0.0);
  t.exact = j.value("exact", false);
  return t;
}

nlohmann::json to_json(const ScoreColumn& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : c.rows) {
    nlohmann::json j = to_json(r.score);
    j["rank"] = r.rank;
    j["below_best"] = r.below_best;
    rows.push_back(std::move(j));
  }
  return {{"task", c.task}, {"metric", c.metric}, {"rows", rows}};
}

ScoreColumn score_column_from_json(const nlohmann::json& j) {
  ScoreColumn c;
  c.task = j.at("task").get<std::string>();
  c.metric = j.at("metric").get<std::string>();
  for (const auto& r : j.at("rows")) {
    c.rows.push_back({model_score_from_json(r), r.value("rank", 0), r.value("below_best", false)});
  }
  return c;
}

}  // namespace

nlohmann::json to_json(const OcclusionAnalysis& a) {
  nlohmann::json j;
  for (const auto& [key, arr] : {std::pair<const char*, const std::array<ConditionSummary, kConditionCount>*>{
                                     "all", &a.all},
                                 {"common", &a.common},
                                 {"unique", &a.unique}}) {
    j[key] = nlohmann::json::object();
    for (std::size_t c = 0; c < kConditionCount; ++c) {
      j[key][std::string(to_string(static_cast<Condition>(c)))] = to_json((*arr)[c]);
    }
  }
  j["comparisons"] = nlohmann::json::array();
  for (const auto& cmp : a.comparisons) {
    j["comparisons"].push_back({{"a", to_string(cmp.a)}, {"b", to_string(cmp.b)}, {"test", to_json(cmp.test)}});
  }
  return j;
}

namespace {

OcclusionAnalysis occlusion_from_json(const nlohmann::json& j) {
  OcclusionAnalysis a;
  for (const auto& [key, arr] : {std::pair<const char*, std::array<ConditionSummary, kConditionCount>*>{"all", &a.all},
                                 {"common", &a.common},
                                 {"unique", &a.unique}}) {
    for (std::size_t c = 0; c < kConditionCount; ++c) {
      (*arr)[c] = condition_summary_from_json(j.at(key).at(std::string(to_string(static_cast<Condition>(c)))));
    }
  }
  for (const auto& cmp : j.at("comparisons")) {
    a.comparisons.push_back({parse_condition(cmp.at("a").get<std::string>()),
                             parse_condition(cmp.at("b").get<std::string>()), test_result_from_json(cmp.at("test"))});
  }
  return a;
}

}  // namespace

nlohmann::json to_json(const AnalysisSummary& s) {
  nlohmann::json j;
  j["n_faces"] = s.n_faces;
  j["n_subjects"] = s.n_subjects;
  j["human_mean_accuracy"] = s.human_mean_accuracy ? nlohmann::json(*s.human_mean_accuracy) : nlohmann::json();
  if (s.reliability) {
    j["reliability"] = {{"r", s.reliability->r},
                        {"rc", s.reliability->rc},
                        {"n_faces", s.reliability->n_faces},
                        {"n_draws", s.reliability->n_draws}};
  } else {
    j["reliability"] = nullptr;
  }
  j["classification"] = nlohmann::json::array();
  for (const auto& c : s.classification) j["classification"].push_back(to_json(c));
  j["attributes"] = nlohmann::json::array();
  for (const auto& c : s.attributes) j["attributes"].push_back(to_json(c));
  j["occlusion"] = s.occlusion ? to_json(*s.occlusion) : nlohmann::json();
  return j;
}

AnalysisSummary analysis_summary_from_json(const nlohmann::json& j) {
  try {
    AnalysisSummary s;
    s.n_faces = j.value("n_faces", std::size_t{0});
    s.n_subjects = j.value("n_subjects", std::size_t{0});
    if (j.contains("human_mean_accuracy") && !j["human_mean_accuracy"].is_null()) {
      s.human_mean_accuracy = j["human_mean_accuracy"].get<double>();
    }
    if (j.contains("reliability") && !j["reliability"].is_null()) {
      const auto& r = j["reliability"];
      s.reliability = ReliabilityResult{r.at("r").get<double>(), r.at("rc").get<double>(),
                                        r.value("n_faces", std::size_t{0}), r.value("n_draws", std::size_t{0})};
    }
    for (const auto& c : j.value("classification", nlohmann::json::array())) {
      s.classification.push_back(score_column_from_json(c));
    }
    for (const auto& c : j.value("attributes", nlohmann::json::array())) s.attributes.push_back(score_column_from_json(c));
    if (j.contains("occlusion") && !j["occlusion"].is_null()) s.occlusion = occlusion_from_json(j["occlusion"]);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("analysis summary: ") + e.what());
  }
}

namespace {

void markdown_table(std::ostringstream& md, const std::vector<ScoreColumn>& columns) {
  std::vector<std::string> order;
  for (const auto& col : columns) {
    for (const auto& r : col.rows) {
      if (std::find(order.begin(), order.end(), r.score.name) == order.end()) order.push_back(r.score.name);
    }
  }
  md << "| Model |";
  for (const auto& col : columns) md << ' ' << col.task << " df | " << col.task << ' ' << col.metric << " | R |";
  md << "\n|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) md << "---:|---:|---:|";
  md << '\n';
  for (const auto& name : order) {
    md << "| " << name << " |";
    for (const auto& col : columns) {
      const auto it = std::find_if(col.rows.begin(), col.rows.end(),
                                   [&](const RankedScore& r) { return r.score.name == name; });
      if (it == col.rows.end()) {
        md << " | | |";
        continue;
      }
      const bool pct = col.metric == "accuracy";
      const double scale = pct ? 100.0 : 1.0;
      md << ' ' << (it->score.reference ? std::string("-") : fmt(it->score.df, 1)) << " | "
         << fmt(scale * it->score.mean, pct ? 1 : 2) << (pct ? "%" : "") << " ± "
         << fmt(scale * it->score.std, pct ? 1 : 2) << (it->below_best ? "*" : "") << " | "
         << (it->rank > 0 ? std::to_string(it->rank) : std::string("-")) << " |";
    }
    md << '\n';
  }
  md << "\n`*` below the best model in more than 95% of cross-validation splits.\n\n";
}

}  // namespace

std::string render_markdown(const AnalysisSummary& s) {
  std::ostringstream md;
  md << "# Analysis summary\n\n";
  md << "- Faces: " << s.n_faces << '\n';
  md << "- Subjects: " << s.n_subjects << '\n';
  if (s.human_mean_accuracy) md << "- Human mean accuracy: " << fmt(100.0 * *s.human_mean_accuracy, 1) << "%\n";
  if (s.reliability) {
    md << "- Split-half reliability: r = " << fmt(s.reliability->r, 3) << ", corrected rc = " << fmt(s.reliability->rc, 3)
       << " (" << s.reliability->n_faces << " faces)\n";
  }
  md << '\n';
  if (!s.classification.empty()) {
    md << "## Race classification\n\n";
    markdown_table(md, s.classification);
  }
  if (!s.attributes.empty()) {
    md << "## Other attributes\n\n";
    markdown_table(md, s.attributes);
  }
  if (s.occlusion) {
    md << "## Occlusion\n\n| Condition | Trials | Accuracy | Mean RT (ms) | Median RT (ms) |\n|---|---:|---:|---:|---:|\n";
    for (std::size_t c = 0; c < kConditionCount; ++c) {
      const auto& cs = s.occlusion->all[c];
      md << "| " << to_string(static_cast<Condition>(c)) << " | " << cs.n_trials << " | " << fmt(100.0 * cs.accuracy, 1)
         << "% | " << fmt(cs.mean_rt_ms, 0) << " | " << fmt(cs.median_rt_ms, 0) << " |\n";
    }
    md << "\n| Comparison | p (rank-sum) |\n|---|---:|\n";
    for (const auto& cmp : s.occlusion->comparisons) {
      char p[32];
      std::snprintf(p, sizeof p, "%.3g", cmp.test.p_value);
      md << "| " << to_string(cmp.a) << " vs " << to_string(cmp.b) << " | " << p << " |\n";
    }
    md << '\n';
  }
  return md.str();
}

std::vector<std::string> report_inputs() { return {"summary.json", "table_race.csv", "table_attributes.csv"}; }

void write_report(const std::filesystem::path& analysis_dir, const std::filesystem::path& out) {
  std::vector<std::string> missing;
  for (const auto& name : report_inputs()) {
    if (!std::filesystem::exists(analysis_dir / name)) missing.push_back((analysis_dir / name).string());
  }
  if (!missing.empty()) {
    std::string msg = "missing analysis inputs (run `cfk analyze` first):";
    for (const auto& m : missing) msg += "\n  " + m;
    throw Error(ErrorCode::MissingInputs, msg);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text(analysis_dir / "summary.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("summary.json: ") + e.what());
  }
  detail::write_text(out, render_markdown(analysis_summary_from_json(j)));
}

}  // namespace cfk
