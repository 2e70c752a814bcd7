#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cfk/geometry.hpp"

namespace cfk {

inline constexpr std::size_t kLandmarkCount = 76;

struct LandmarkSet {
  std::array<Point2, kLandmarkCount> points{};

  /// Throws SchemaViolation unless exactly 76 finite points are given.
  static LandmarkSet from_points(std::span<const Point2> points);

  const Point2& operator[](std::size_t i) const { return points[i]; }
  Point2& operator[](std::size_t i) { return points[i]; }

  std::vector<Point2> select(std::span<const std::size_t> indices) const;
  bool operator==(const LandmarkSet&) const = default;
};

enum class FacePart { LeftEye, RightEye, Nose, Mouth, Contour, LeftEyebrow, RightEyebrow };

std::string_view to_string(FacePart part) noexcept;

/// Declared landmark indices per face part. Within-part ordering follows the
/// default layout:
///   eye (9):     outer corner, 3 upper-lid points, inner corner, 3 lower-lid points, pupil
///   eyebrow (6): outer end ... inner end
///   nose (12):   bridge top, bridge mid, bridge bottom, left alar top, left alar,
///                left nostril, tip, subnasale, right alar top, right alar,
///                right nostril, columella
///   mouth (18):  outer lip clockwise from the left corner (left corner, 5 upper,
///                right corner, 5 lower), then inner lip (left corner, 2 upper,
///                right corner, 2 lower)
///   contour (15): left temple, down around the chin, to the right temple
/// "Left" is image left.
struct PartIndexMap {
  std::vector<std::size_t> left_eye;
  std::vector<std::size_t> right_eye;
  std::vector<std::size_t> nose;
  std::vector<std::size_t> mouth;
  std::vector<std::size_t> contour;
  std::vector<std::size_t> left_eyebrow;
  std::vector<std::size_t> right_eyebrow;
  // Sub-partition of the contour used for configural (inter-part) features.
  std::vector<std::size_t> left_contour;
  std::vector<std::size_t> chin;
  std::vector<std::size_t> right_contour;

  static PartIndexMap defaults();

  const std::vector<std::size_t>& part(FacePart p) const;

  /// Landmark used as the inner end of each eyebrow (last eyebrow entry).
  std::size_t left_brow_inner() const { return left_eyebrow.back(); }
  std::size_t right_brow_inner() const { return right_eyebrow.back(); }

  /// Throws SchemaViolation: indices < 76, main parts disjoint, part sizes
  /// 9/9/12/18/15, contour split covers exactly the contour.
  void validate() const;

  bool operator==(const PartIndexMap&) const = default;
};

void to_json(nlohmann::json& j, const PartIndexMap& m);
void from_json(const nlohmann::json& j, PartIndexMap& m);

/// Default 26-landmark subset used for the exhaustive (triangulated) features:
/// 4 eyebrow ends, 5 points per eye, 5 nose points, 4 mouth points, and three
/// contour points. Non-canonical: the source data never enumerates it.
std::vector<std::size_t> default_delaunay_subset();

/// Symmetric mean face in the normalized frame (eye midpoint at (160, 140),
/// inner eyebrows to chin = 250 px). Indexed per PartIndexMap::defaults().
LandmarkSet canonical_template();

}  // namespace cfk
