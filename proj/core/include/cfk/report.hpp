#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfk/cross_validation.hpp"
#include "cfk/occlusion.hpp"
#include "cfk/stats.hpp"

namespace cfk {

/// One model's cross-validated score on one task (accuracy for
/// classification, correlation for regression). Reference rows (humans)
/// are printed but not ranked.
struct ModelScore {
  std::string name;
  std::size_t dims = 0;
  std::size_t n_faces = 0;
  double df = 0.0;  // mean number of principal components kept
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> per_split;
  bool reference = false;
};

nlohmann::json to_json(const ModelScore& s);
ModelScore model_score_from_json(const nlohmann::json& j);

struct RankedScore {
  ModelScore score;
  int rank = 0;             // 1 = best; 0 for reference rows
  bool below_best = false;  // scored below the best model in > 95% of splits
};

/// Split-wise comparison on paired per-split scores.
ModelComparison compare_scores(std::span<const double> a, std::span<const double> b);

/// Ranks by descending mean (ties broken by name) and flags every model that
/// loses to the top-ranked one in more than 95% of the shared splits.
std::vector<RankedScore> rank_models(std::vector<ModelScore> scores);

struct ScoreColumn {
  std::string task;    // e.g. "race", "human-accuracy", "age"
  std::string metric;  // "accuracy" or "corr"
  std::vector<RankedScore> rows;
};

/// Table with one row per model and (df, mean, std, below_best, rank) per
/// column; models missing from a column leave empty cells. The first data
/// row gives each column's face count.
void write_score_table_csv(const std::vector<ScoreColumn>& columns, const std::filesystem::path& path);

nlohmann::json to_json(const OcclusionAnalysis& a);

struct AnalysisSummary {
  std::size_t n_faces = 0;
  std::size_t n_subjects = 0;
  std::optional<double> human_mean_accuracy;
  std::optional<ReliabilityResult> reliability;
  std::vector<ScoreColumn> classification;  // race-style table
  std::vector<ScoreColumn> attributes;      // gender/age/height/weight-style table
  std::optional<OcclusionAnalysis> occlusion;
};

nlohmann::json to_json(const AnalysisSummary& s);
AnalysisSummary analysis_summary_from_json(const nlohmann::json& j);

std::string render_markdown(const AnalysisSummary& summary);

/// Files `write_report` needs inside an analysis directory.
std::vector<std::string> report_inputs();

/// Reads <analysis_dir>/summary.json, renders Markdown to `out`. Throws
/// MissingInputs naming every absent input.
void write_report(const std::filesystem::path& analysis_dir, const std::filesystem::path& out);

}  // namespace cfk
