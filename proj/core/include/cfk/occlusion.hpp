#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfk/image.hpp"
#include "cfk/landmarks.hpp"
#include "cfk/nonparametric.hpp"
#include "cfk/responses.hpp"

namespace cfk {

/// Horizontal band in normalized-face pixel coordinates. A point (x, y) is
/// covered when y_top <= y <= y_top + height and x_left <= x <= x_right.
struct OcclusionBand {
  Condition condition = Condition::None;
  double y_top = 0.0;
  double height = 0.0;
  double x_left = 0.0;
  double x_right = 0.0;
  std::uint8_t fill = 0;

  bool empty() const noexcept { return condition == Condition::None || height <= 0.0; }
  bool covers(Point2 p) const noexcept;
};

struct BandOptions {
  double margin = 4.0;  // px added above and below the tallest part
  std::uint8_t fill = 0;
};

/// Bands for none/eye/nose/mouth (indexed by Condition). All three occluding
/// bands share one height: the largest vertical extent among both eyes, the
/// lower half of the nose, and the mouth, plus 2 * margin. Each band is
/// centered on its part and spans the x-range of all landmarks. Throws
/// PartsOverlap when a band would cover a landmark of the other parts
/// (eyes, eyebrows, nose, mouth; the nose's own upper half is allowed).
std::array<OcclusionBand, kConditionCount> make_bands(const LandmarkSet& landmarks, const PartIndexMap& parts,
                                                       const BandOptions& options = {});
OcclusionBand make_band(const LandmarkSet& landmarks, const PartIndexMap& parts, Condition condition,
                        const BandOptions& options = {});

/// Copy of the image with covered pixel centers set to the band's fill.
GrayImage apply_band(const GrayImage& image, const OcclusionBand& band);

nlohmann::json to_json(const OcclusionBand& band);

struct DesignCandidate {
  std::string face_id;
  double accuracy = 0.0;  // intact-face human accuracy
  int cls = 0;            // 0 = North, 1 = South
};

struct DesignOptions {
  std::size_t n_common = 108;
  std::size_t n_unique = 109;
  std::optional<double> target;  // default: mean accuracy of the eligible pool
  double tolerance = 0.01;
  double min_accuracy = 0.5;
  int restarts = 1000;
  std::uint64_t seed = 1;
};

struct ConditionDesign {
  std::vector<std::string> common;
  std::array<std::vector<std::string>, kConditionCount> unique;
  std::array<double, kConditionCount> mean_accuracy{};
  double target = 0.0;
  int restarts_used = 0;

  /// Faces shown in a condition: common then unique.
  std::vector<std::string> members(Condition c) const;
};

/// Selects n_common + 4 * n_unique faces with accuracy >= min_accuracy, half
/// from each class, and splits them into a common set and four disjoint
/// unique sets so that every condition's mean intact accuracy lies within
/// `tolerance` of the target. Each set is class-balanced (odd sizes alternate
/// the extra face between classes). Greedy pairwise swaps from random starts;
/// throws InfeasibleBalance when the pool is too small or no restart succeeds.
ConditionDesign build_design(std::span<const DesignCandidate> candidates, const DesignOptions& options = {});

nlohmann::json to_json(const ConditionDesign& design);
ConditionDesign design_from_json(const nlohmann::json& j);

struct ConditionSummary {
  std::size_t n_trials = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
  double mean_rt_ms = 0.0;
  double median_rt_ms = 0.0;
};

struct ConditionComparison {
  Condition a = Condition::None;
  Condition b = Condition::None;
  TestResult test;  // rank-sum on binary correct labels, trials concatenated across subjects
};

struct OcclusionAnalysis {
  std::array<ConditionSummary, kConditionCount> all;
  std::array<ConditionSummary, kConditionCount> common;
  std::array<ConditionSummary, kConditionCount> unique;
  std::vector<ConditionComparison> comparisons;  // all 6 condition pairs
};

/// Per-condition accuracy and RT over effective (answered, deduplicated)
/// trials; the common/unique breakdown needs the design.
OcclusionAnalysis analyze_occlusion(std::span<const ResponseRecord> responses,
                                    const ConditionDesign* design = nullptr);

}  // namespace cfk
