#include "cfk/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cfk/error.hpp"

namespace cfk {

namespace {

bool lex_less(Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

// Sign of the in-circle determinant with a relative dead zone: +1 strictly
// inside, -1 strictly outside, 0 for (numerically) cocircular.
int incircle_sign(Point2 a, Point2 b, Point2 c, Point2 d) {
  const long double det = incircle(a, b, c, d);
  const long double adx = static_cast<long double>(a.x) - d.x, ady = static_cast<long double>(a.y) - d.y;
  const long double bdx = static_cast<long double>(b.x) - d.x, bdy = static_cast<long double>(b.y) - d.y;
  const long double cdx = static_cast<long double>(c.x) - d.x, cdy = static_cast<long double>(c.y) - d.y;
  const long double perm = (adx * adx + ady * ady) * (std::fabs(bdx * cdy) + std::fabs(bdy * cdx)) +
                           (bdx * bdx + bdy * bdy) * (std::fabs(cdx * ady) + std::fabs(cdy * adx)) +
                           (cdx * cdx + cdy * cdy) * (std::fabs(adx * bdy) + std::fabs(ady * bdx));
  const long double tol = 1e-12L * perm;
  if (det > tol) return 1;
  if (det < -tol) return -1;
  return 0;
}

Triangle ccw(const std::vector<Point2>& pts, std::size_t a, std::size_t b, std::size_t c) {
  if (orient2d(pts[a], pts[b], pts[c]) < 0) std::swap(b, c);
  return {a, b, c};
}

Triangle canonical(Triangle t) {
  const auto it = std::min_element(t.begin(), t.end());
  std::rotate(t.begin(), it, t.end());
  return t;
}

// Mesh with an edge -> opposite-vertex map for Lawson flips.
class Mesh {
 public:
  explicit Mesh(const std::vector<Point2>& pts) : pts_(pts) {}

  void add(Triangle t) {
    tris_.push_back(t);
    index(tris_.size() - 1);
  }

  // Directed edge (a, b) of a CCW triangle -> triangle slot.
  const std::map<std::pair<std::size_t, std::size_t>, std::size_t>& edges() const { return edges_; }
  const std::vector<Triangle>& triangles() const { return tris_; }

  // Tries to flip the shared edge (a, b). Returns true on a flip.
  bool maybe_flip(std::size_t a, std::size_t b, bool ties) {
    const auto ab = edges_.find({a, b});
    const auto ba = edges_.find({b, a});
    if (ab == edges_.end() || ba == edges_.end()) return false;
    const std::size_t t1 = ab->second, t2 = ba->second;
    const std::size_t c = third(tris_[t1], a, b);
    const std::size_t d = third(tris_[t2], b, a);
    const int s = incircle_sign(pts_[a], pts_[b], pts_[c], pts_[d]);
    bool flip = false;
    if (s > 0) {
      flip = true;
    } else if (s == 0 && ties) {
      // Prefer the diagonal touching the lexicographically smallest vertex.
      std::size_t m = a;
      for (std::size_t v : {b, c, d}) {
        if (lex_less(pts_[v], pts_[m])) m = v;
      }
      flip = (m == c || m == d);
    }
    if (!flip) return false;
    // The quadrilateral a-d-b-c must be strictly convex for (c, d) to be a valid edge.
    const double side_a = orient2d(pts_[c], pts_[d], pts_[a]);
    const double side_b = orient2d(pts_[c], pts_[d], pts_[b]);
    if (!(side_a * side_b < 0.0)) return false;
    unindex(t1);
    unindex(t2);
    tris_[t1] = ccw(pts_, c, a, d);
    tris_[t2] = ccw(pts_, d, b, c);
    index(t1);
    index(t2);
    return true;
  }

 private:
  static std::size_t third(const Triangle& t, std::size_t a, std::size_t b) {
    for (std::size_t v : t) {
      if (v != a && v != b) return v;
    }
    return t[0];
  }
  void index(std::size_t slot) {
    const Triangle& t = tris_[slot];
    for (int k = 0; k < 3; ++k) edges_[{t[k], t[(k + 1) % 3]}] = slot;
  }
  void unindex(std::size_t slot) {
    const Triangle& t = tris_[slot];
    for (int k = 0; k < 3; ++k) edges_.erase({t[k], t[(k + 1) % 3]});
  }

  const std::vector<Point2>& pts_;
  std::vector<Triangle> tris_;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edges_;
};

void legalize(Mesh& mesh, bool ties) {
  // n is small (tens of points): sweep all edges until a full pass makes no flip.
  for (std::size_t pass = 0; pass < 100000; ++pass) {
    bool flipped = false;
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    for (const auto& [e, slot] : mesh.edges()) {
      if (e.first < e.second) keys.push_back(e);
    }
    for (const auto& [a, b] : keys) flipped |= mesh.maybe_flip(a, b, ties);
    if (!flipped) return;
  }
  throw Error(ErrorCode::DegenerateInput, "Delaunay edge flipping did not converge");
}

}  // namespace

Triangulation delaunay(std::span<const Point2> points) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::DegenerateInput, "triangulation needs at least 3 points");
  std::vector<Point2> pts(points.begin(), points.end());
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(ErrorCode::DegenerateInput, "non-finite point");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return lex_less(pts[i], pts[j]); });
  for (std::size_t k = 1; k < n; ++k) {
    if (pts[order[k]] == pts[order[k - 1]]) {
      throw Error(ErrorCode::DegenerateInput, "coincident points " + std::to_string(order[k - 1]) + " and " +
                                                   std::to_string(order[k]));
    }
  }
  // First point off the line through the two lexicographically smallest points.
  std::size_t first_off = 2;
  while (first_off < n && orient2d(pts[order[0]], pts[order[1]], pts[order[first_off]]) == 0) ++first_off;
  if (first_off == n) throw Error(ErrorCode::DegenerateInput, "all points are collinear");

  Mesh mesh(pts);
  // Collinear prefix is fanned to the first off-line point. Points sorted
  // lexicographically on a line are in line order, so the fan is valid.
  const std::size_t apex = order[first_off];
  for (std::size_t k = 0; k + 1 < first_off; ++k) mesh.add(ccw(pts, order[k], order[k + 1], apex));

  // Hull as a CCW cycle.
  std::vector<std::size_t> hull;
  {
    const bool apex_left = orient2d(pts[order[0]], pts[order[1]], pts[apex]) > 0;
    if (apex_left) {
      for (std::size_t k = 0; k < first_off; ++k) hull.push_back(order[k]);
      hull.push_back(apex);
    } else {
      hull.push_back(apex);
      for (std::size_t k = first_off; k-- > 0;) hull.push_back(order[k]);
    }
  }

  // Remaining points lie lexicographically after every inserted point, so
  // they are outside the current hull; connect each to all strictly visible edges.
  for (std::size_t k = first_off + 1; k < n; ++k) {
    const std::size_t p = order[k];
    const std::size_t h = hull.size();
    std::vector<bool> visible(h);
    bool any = false;
    for (std::size_t e = 0; e < h; ++e) {
      visible[e] = orient2d(pts[hull[e]], pts[hull[(e + 1) % h]], pts[p]) < 0;
      any |= visible[e];
    }
    if (!any) throw Error(ErrorCode::DegenerateInput, "point sweep failed (numerically degenerate input)");
    // Visible edges form one contiguous run; find its start.
    std::size_t start = 0;
    while (!(visible[start] && !visible[(start + h - 1) % h])) ++start;
    std::size_t count = 0;
    while (visible[(start + count) % h]) {
      const std::size_t e = (start + count) % h;
      mesh.add(ccw(pts, hull[e], hull[(e + 1) % h], p));
      ++count;
    }
    // Replace the interior vertices of the visible chain with p.
    std::vector<std::size_t> next;
    next.reserve(h + 1);
    const std::size_t first_v = start;               // chain start vertex (kept)
    const std::size_t last_v = (start + count) % h;  // chain end vertex (kept)
    for (std::size_t i = 0; i < h; ++i) {
      const std::size_t v = (last_v + i) % h;
      next.push_back(hull[v]);
      if (v == first_v) break;
    }
    next.push_back(p);
    hull = std::move(next);
  }

  legalize(mesh, false);
  legalize(mesh, true);

  Triangulation out;
  out.vertices = std::move(pts);
  for (const auto& t : mesh.triangles()) out.triangles.push_back(canonical(t));
  std::sort(out.triangles.begin(), out.triangles.end());
  return out;
}

PatchTopology patch_topology(std::span<const std::size_t> subset, const LandmarkSet& reference) {
  PatchTopology topo;
  topo.subset.assign(subset.begin(), subset.end());
  for (std::size_t i : subset) {
    if (i >= kLandmarkCount) throw Error(ErrorCode::SchemaViolation, "delaunay subset index out of range");
  }
  const Triangulation tri = delaunay(reference.select(subset));
  for (const auto& t : tri.triangles) topo.patches.push_back({subset[t[0]], subset[t[1]], subset[t[2]]});
  return topo;
}

}  // namespace cfk
