#include "cfk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfk/error.hpp"

namespace cfk {

double distance(Point2 a, Point2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

Point2 centroid(std::span<const Point2> points) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "centroid of empty point set");
  Point2 sum;
  for (const auto& p : points) sum = sum + p;
  return (1.0 / static_cast<double>(points.size())) * sum;
}

double orient2d(Point2 a, Point2 b, Point2 c) noexcept {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

long double incircle(Point2 a, Point2 b, Point2 c, Point2 d) noexcept {
  const long double adx = static_cast<long double>(a.x) - d.x;
  const long double ady = static_cast<long double>(a.y) - d.y;
  const long double bdx = static_cast<long double>(b.x) - d.x;
  const long double bdy = static_cast<long double>(b.y) - d.y;
  const long double cdx = static_cast<long double>(c.x) - d.x;
  const long double cdy = static_cast<long double>(c.y) - d.y;
  const long double alift = adx * adx + ady * ady;
  const long double blift = bdx * bdx + bdy * bdy;
  const long double clift = cdx * cdx + cdy * cdy;
  return alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) + clift * (adx * bdy - ady * bdx);
}

std::vector<std::size_t> convex_hull(std::span<const Point2> points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return points[i].x < points[j].x || (points[i].x == points[j].x && points[i].y < points[j].y);
  });
  order.erase(std::unique(order.begin(), order.end(),
                          [&](std::size_t i, std::size_t j) { return points[i] == points[j]; }),
              order.end());
  if (order.size() < 3) return order;

  std::vector<std::size_t> hull(2 * order.size());
  std::size_t k = 0;
  for (std::size_t idx : order) {
    while (k >= 2 && orient2d(points[hull[k - 2]], points[hull[k - 1]], points[idx]) <= 0) --k;
    hull[k++] = idx;
  }
  for (std::size_t i = order.size() - 1, lower = k + 1; i-- > 0;) {
    const std::size_t idx = order[i];
    while (k >= lower && orient2d(points[hull[k - 2]], points[hull[k - 1]], points[idx]) <= 0) --k;
    hull[k++] = idx;
  }
  hull.resize(k - 1);
  return hull;
}

PolygonSide classify_in_convex(Point2 p, std::span<const Point2> polygon, double tolerance) noexcept {
  if (polygon.empty()) return PolygonSide::Outside;
  if (polygon.size() == 1) return distance(p, polygon[0]) <= tolerance ? PolygonSide::Boundary : PolygonSide::Outside;
  if (polygon.size() == 2) {
    const Point2 a = polygon[0], b = polygon[1];
    const double len = distance(a, b);
    if (len == 0.0) return distance(p, a) <= tolerance ? PolygonSide::Boundary : PolygonSide::Outside;
    const double off = std::abs(orient2d(a, b, p)) / len;
    const double t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / (len * len);
    return (off <= tolerance && t >= 0.0 && t <= 1.0) ? PolygonSide::Boundary : PolygonSide::Outside;
  }
  bool on_edge = false;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Point2 a = polygon[i];
    const Point2 b = polygon[(i + 1) % polygon.size()];
    const double len = distance(a, b);
    const double signed_dist = len > 0.0 ? orient2d(a, b, p) / len : 0.0;
    if (signed_dist < -tolerance) return PolygonSide::Outside;
    if (signed_dist <= tolerance) on_edge = true;
  }
  return on_edge ? PolygonSide::Boundary : PolygonSide::Inside;
}

namespace {

struct PixelBox {
  int x0, x1, y0, y1;  // inclusive
  bool empty() const { return x0 > x1 || y0 > y1; }
};

PixelBox bounding_pixels(std::span<const Point2> polygon, int width, int height) {
  double minx = polygon[0].x, maxx = polygon[0].x, miny = polygon[0].y, maxy = polygon[0].y;
  for (const auto& p : polygon) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  return {std::max(0, static_cast<int>(std::ceil(minx - 1e-9))), std::min(width - 1, static_cast<int>(std::floor(maxx + 1e-9))),
          std::max(0, static_cast<int>(std::ceil(miny - 1e-9))), std::min(height - 1, static_cast<int>(std::floor(maxy + 1e-9)))};
}

}  // namespace

std::vector<std::size_t> rasterize_convex(std::span<const Point2> polygon, int width, int height) {
  std::vector<std::size_t> pixels;
  if (polygon.empty() || width <= 0 || height <= 0) return pixels;
  const PixelBox box = bounding_pixels(polygon, width, height);
  if (box.empty()) return pixels;
  for (int y = box.y0; y <= box.y1; ++y) {
    for (int x = box.x0; x <= box.x1; ++x) {
      if (classify_in_convex({static_cast<double>(x), static_cast<double>(y)}, polygon) != PolygonSide::Outside) {
        pixels.push_back(static_cast<std::size_t>(y) * width + x);
      }
    }
  }
  return pixels;
}

std::vector<std::vector<std::size_t>> rasterize_partition(std::span<const std::vector<Point2>> patches, int width,
                                                           int height) {
  std::vector<std::vector<std::size_t>> out(patches.size());
  std::vector<std::uint8_t> taken(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 0);
  for (std::size_t id = 0; id < patches.size(); ++id) {
    for (std::size_t px : rasterize_convex(patches[id], width, height)) {
      if (taken[px]) continue;
      taken[px] = 1;
      out[id].push_back(px);
    }
  }
  return out;
}

std::size_t PixelMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), std::uint8_t{1}));
}

PixelMask hull_mask(std::span<const Point2> points, int width, int height) {
  PixelMask mask{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0)};
  std::vector<Point2> polygon;
  for (std::size_t i : convex_hull(points)) polygon.push_back(points[i]);
  for (std::size_t px : rasterize_convex(polygon, width, height)) mask.inside[px] = 1;
  return mask;
}

}  // namespace cfk
