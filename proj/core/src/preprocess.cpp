#include "cfk/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "cfk/error.hpp"
#include "cfk/parallel.hpp"

namespace cfk {

Point2 SimilarityTransform::apply(Point2 p) const noexcept {
  const double c = std::cos(rotation), s = std::sin(rotation);
  return {scale * (c * p.x - s * p.y) + dx, scale * (s * p.x + c * p.y) + dy};
}

SimilarityTransform SimilarityTransform::inverse() const {
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "similarity transform with non-positive scale");
  const double c = std::cos(-rotation), s = std::sin(-rotation);
  const double inv = 1.0 / scale;
  return {-rotation, inv, -inv * (c * dx - s * dy), -inv * (s * dx + c * dy)};
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& other) const noexcept {
  const double c = std::cos(rotation), s = std::sin(rotation);
  return {rotation + other.rotation, scale * other.scale, scale * (c * other.dx - s * other.dy) + dx,
          scale * (s * other.dx + c * other.dy) + dy};
}

LandmarkSet SimilarityTransform::apply(const LandmarkSet& landmarks) const {
  LandmarkSet out;
  for (std::size_t i = 0; i < kLandmarkCount; ++i) out[i] = apply(landmarks[i]);
  return out;
}

namespace {

struct LevelledFrame {
  double rotation;
  Point2 eye_mid;
  double brow_y;
  double chin_y;
};

LevelledFrame level_eyes(const LandmarkSet& landmarks, const PartIndexMap& parts) {
  const Point2 left = centroid(landmarks.select(parts.left_eye));
  const Point2 right = centroid(landmarks.select(parts.right_eye));
  const Point2 axis = right - left;
  if (std::hypot(axis.x, axis.y) < 1e-9) throw Error(ErrorCode::DegenerateLandmarks, "eye centers coincide");
  const SimilarityTransform level{-std::atan2(axis.y, axis.x), 1.0, 0.0, 0.0};

  const double brow_y =
      0.5 * (level.apply(landmarks[parts.left_brow_inner()]).y + level.apply(landmarks[parts.right_brow_inner()]).y);
  double chin_y = -std::numeric_limits<double>::infinity();
  for (std::size_t i : parts.contour) chin_y = std::max(chin_y, level.apply(landmarks[i]).y);
  return {level.rotation, 0.5 * (left + right), brow_y, chin_y};
}

}  // namespace

double chin_to_brow_distance(const LandmarkSet& landmarks, const PartIndexMap& parts) {
  const auto f = level_eyes(landmarks, parts);
  return f.chin_y - f.brow_y;
}

SimilarityTransform estimate_normalization(const LandmarkSet& landmarks, const PartIndexMap& parts,
                                           const CanonicalFrame& frame) {
  const auto f = level_eyes(landmarks, parts);
  const double span = f.chin_y - f.brow_y;
  if (!(span > 1e-9)) {
    throw Error(ErrorCode::DegenerateLandmarks, "chin and eyebrow landmarks have no vertical separation");
  }
  SimilarityTransform t{f.rotation, frame.chin_to_brow / span, 0.0, 0.0};
  const Point2 mid = t.apply(f.eye_mid);
  t.dx = frame.eye_midpoint.x - mid.x;
  t.dy = frame.eye_midpoint.y - mid.y;
  return t;
}

NormalizedFace normalize_geometry(const LandmarkSet& landmarks, const GrayImage& image, const PartIndexMap& parts,
                                  const CanonicalFrame& frame) {
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "cannot normalize an empty image");
  NormalizedFace out;
  out.transform = estimate_normalization(landmarks, parts, frame);
  out.landmarks = out.transform.apply(landmarks);
  out.image = GrayImage(frame.width, frame.height);
  const SimilarityTransform back = out.transform.inverse();
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const Point2 src = back.apply(Point2{static_cast<double>(x), static_cast<double>(y)});
      const double v = sample_bilinear(image, src.x, src.y);
      out.image.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

NormalizedFace normalize_geometry(const FaceRecord& face, const GrayImage& image, const PartIndexMap& parts,
                                  const CanonicalFrame& frame) {
  return normalize_geometry(face.landmarks, image, parts, frame);
}

Histogram histogram(const GrayImage& image) {
  Histogram h{};
  for (std::uint8_t v : image.pixels) h[v] += 1.0;
  return h;
}

Histogram histogram(const GrayImage& image, const PixelMask& mask) {
  if (mask.width != image.width || mask.height != image.height) {
    throw Error(ErrorCode::InvalidArgument, "mask and image sizes differ");
  }
  Histogram h{};
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    if (mask.inside[i]) h[image.pixels[i]] += 1.0;
  }
  return h;
}

namespace {

std::array<double, 256> normalized_cdf(const Histogram& h) {
  double total = 0.0;
  for (double v : h) total += v;
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyImage, "histogram has no pixels");
  std::array<double, 256> cdf{};
  double run = 0.0;
  for (std::size_t i = 0; i < 256; ++i) {
    run += h[i];
    cdf[i] = run / total;
  }
  return cdf;
}

}  // namespace

std::array<std::uint8_t, 256> specification_lut(const Histogram& source, const Histogram& target) {
  const auto fs = normalized_cdf(source);
  const auto ft = normalized_cdf(target);
  std::array<std::uint8_t, 256> lut{};
  std::size_t u = 0;
  for (std::size_t v = 0; v < 256; ++v) {
    const double below = v == 0 ? 0.0 : fs[v - 1];
    const double mid = 0.5 * (below + fs[v]);
    // mid is non-decreasing in v, so the search can resume from the last u.
    while (u < 255 && ft[u] < mid - 1e-12) ++u;
    lut[v] = static_cast<std::uint8_t>(u);
  }
  return lut;
}

GrayImage equalize_to_reference(const GrayImage& image, const GrayImage& reference) {
  if (image.empty() || reference.empty()) throw Error(ErrorCode::EmptyImage, "histogram matching needs two images");
  const auto lut = specification_lut(histogram(image), histogram(reference));
  GrayImage out = image;
  for (auto& v : out.pixels) v = lut[v];
  return out;
}

PixelMask face_mask(const NormalizedFace& face) {
  return hull_mask(face.landmarks.points, face.image.width, face.image.height);
}

NormalizedFace equalize_face(const NormalizedFace& face, const NormalizedFace& reference) {
  if (face.image.empty() || reference.image.empty()) {
    throw Error(ErrorCode::EmptyImage, "histogram matching needs two images");
  }
  const PixelMask mask = face_mask(face);
  const PixelMask ref_mask = face_mask(reference);
  const auto lut = specification_lut(histogram(face.image, mask), histogram(reference.image, ref_mask));
  NormalizedFace out = face;
  for (std::size_t i = 0; i < out.image.pixels.size(); ++i) {
    out.image.pixels[i] = mask.inside[i] ? lut[out.image.pixels[i]] : std::uint8_t{0};
  }
  return out;
}

double earth_movers_distance(const Histogram& a, const Histogram& b) {
  const auto fa = normalized_cdf(a);
  const auto fb = normalized_cdf(b);
  double emd = 0.0;
  for (std::size_t i = 0; i < 256; ++i) emd += std::abs(fa[i] - fb[i]);
  return emd;
}

std::vector<NormalizedFace> preprocess_manifest(const DatasetManifest& manifest, bool equalize, int jobs) {
  const PartIndexMap& parts = manifest.part_index_map;
  std::vector<NormalizedFace> out(manifest.faces.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const FaceRecord& f = manifest.faces[i];
    out[i] = normalize_geometry(f, manifest.load_image(f), parts);
  });
  if (equalize && !out.empty()) {
    const auto ref = manifest.index_of(manifest.reference_face_id);
    if (!ref) throw Error(ErrorCode::SchemaViolation, "reference face " + manifest.reference_face_id + " not in manifest");
    const NormalizedFace reference = out[*ref];
    parallel_for(out.size(), jobs, [&](std::size_t i) { out[i] = equalize_face(out[i], reference); });
  }
  return out;
}

}  // namespace cfk
