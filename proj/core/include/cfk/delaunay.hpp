#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "cfk/geometry.hpp"
#include "cfk/landmarks.hpp"

namespace cfk {

using Triangle = std::array<std::size_t, 3>;

/// Triangles index into `vertices`. Each triangle is counter-clockwise
/// (orient2d > 0) with its smallest index first; the list is sorted.
struct Triangulation {
  std::vector<Point2> vertices;
  std::vector<Triangle> triangles;
};

/// Delaunay triangulation by a lexicographic sweep followed by Lawson edge
/// flips. Exactly cocircular quadrilaterals (in-circle determinant within
/// 1e-12 relative of zero) take the diagonal touching the lexicographically
/// smallest (x, then y) of their four vertices. Throws DegenerateInput for
/// fewer than three points, coincident points, or an all-collinear set.
Triangulation delaunay(std::span<const Point2> points);

/// Fixed patch layout for the triangulated intensity features: the Delaunay
/// triangles of `subset` on the canonical template, expressed as landmark
/// indices so that patch k covers the same facial region on every face.
struct PatchTopology {
  std::vector<std::size_t> subset;
  std::vector<Triangle> patches;  // entries are landmark indices (not subset positions)
};

PatchTopology patch_topology(std::span<const std::size_t> subset,
                             const LandmarkSet& reference = canonical_template());

}  // namespace cfk
