#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cfk/landmarks.hpp"

namespace cfk {

/// Euclidean distance between the centroids of two landmark groups. Single
/// landmarks are one-element groups.
struct SpatialDef {
  std::string name;
  std::vector<std::size_t> from;
  std::vector<std::size_t> to;

  bool operator==(const SpatialDef&) const = default;
};

enum class PatchStat { Mean, Min, Max };

std::string_view to_string(PatchStat s) noexcept;
PatchStat parse_patch_stat(std::string_view s);

/// One statistic over the pixels whose centers fall inside the convex hull
/// of the listed landmarks.
struct IntensityDef {
  std::string name;
  std::vector<std::size_t> polygon;
  PatchStat stat = PatchStat::Mean;

  bool operator==(const IntensityDef&) const = default;
};

struct MeasurementSpec {
  std::vector<SpatialDef> spatial;
  std::vector<IntensityDef> intensity;

  static constexpr std::size_t kSpatialCount = 23;
  static constexpr std::size_t kIntensityCount = 31;

  /// Anthropometric distances (canthi, pupils, nose, mouth, lips, face width
  /// and height, brow-eye, nose-mouth, mouth-chin) and ten regional patches
  /// (eyes, brows, nose, mouth, cheeks, chin, glabella) with mean/min/max each,
  /// plus the mean over the whole landmark hull.
  static MeasurementSpec defaults(const PartIndexMap& parts = PartIndexMap::defaults());

  /// Throws SchemaViolation unless there are exactly 23 spatial and 31
  /// intensity definitions, every index is < 76, and no group is empty.
  void validate() const;

  bool operator==(const MeasurementSpec&) const = default;
};

void to_json(nlohmann::json& j, const MeasurementSpec& spec);
void from_json(const nlohmann::json& j, MeasurementSpec& spec);

MeasurementSpec load_measurement_spec(const std::filesystem::path& path);
void save_measurement_spec(const MeasurementSpec& spec, const std::filesystem::path& path);

}  // namespace cfk
