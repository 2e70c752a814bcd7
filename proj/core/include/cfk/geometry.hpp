#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cfk {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  bool operator==(const Point2&) const = default;
};

double distance(Point2 a, Point2 b) noexcept;
Point2 centroid(std::span<const Point2> points);

/// Twice the signed area of (a, b, c); positive when c lies to the left of a->b.
double orient2d(Point2 a, Point2 b, Point2 c) noexcept;

/// Positive when d lies strictly inside the circle through a, b, c (given
/// orient2d(a, b, c) > 0). Evaluated in long double.
long double incircle(Point2 a, Point2 b, Point2 c, Point2 d) noexcept;

/// Indices of the convex hull vertices, counter-clockwise (orient2d > 0),
/// collinear boundary points dropped. Fewer than 3 entries for degenerate input.
std::vector<std::size_t> convex_hull(std::span<const Point2> points);

enum class PolygonSide { Outside, Boundary, Inside };

/// Classification against a convex polygon given counter-clockwise.
PolygonSide classify_in_convex(Point2 p, std::span<const Point2> polygon, double tolerance = 1e-9) noexcept;

/// Row-major pixel indices whose centers lie inside or on the boundary of
/// the convex polygon.
std::vector<std::size_t> rasterize_convex(std::span<const Point2> polygon, int width, int height);

/// Exclusive rasterization of a set of non-overlapping convex patches: a pixel
/// whose center touches several patches (shared edges) goes to the lowest id.
std::vector<std::vector<std::size_t>> rasterize_partition(std::span<const std::vector<Point2>> patches,
                                                           int width, int height);

/// Binary mask of the convex hull of the given points.
struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> inside;

  std::size_t count() const noexcept;
};

PixelMask hull_mask(std::span<const Point2> points, int width, int height);

}  // namespace cfk
