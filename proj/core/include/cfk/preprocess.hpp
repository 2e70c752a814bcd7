#pragma once

#include <array>

#include "cfk/dataset.hpp"
#include "cfk/geometry.hpp"
#include "cfk/image.hpp"
#include "cfk/landmarks.hpp"

namespace cfk {

/// p' = scale * R(rotation) * p + translation.
struct SimilarityTransform {
  double rotation = 0.0;  // radians
  double scale = 1.0;
  double dx = 0.0;
  double dy = 0.0;

  Point2 apply(Point2 p) const noexcept;
  SimilarityTransform inverse() const;
  /// (this ∘ other)(p) == this->apply(other.apply(p)).
  SimilarityTransform compose(const SimilarityTransform& other) const noexcept;
  LandmarkSet apply(const LandmarkSet& landmarks) const;
};

/// Output frame of geometric normalization.
struct CanonicalFrame {
  int width = 320;
  int height = 400;
  Point2 eye_midpoint{160.0, 140.0};
  double chin_to_brow = 250.0;
};

struct NormalizedFace {
  GrayImage image;
  LandmarkSet landmarks;
  SimilarityTransform transform;
};

/// Rotation levels the inter-eye axis (eye centroids), one isotropic scale
/// puts the chin (lowest contour landmark) 250 px below the inner-eyebrow
/// mean, and the eye midpoint lands on the frame's canonical origin.
SimilarityTransform estimate_normalization(const LandmarkSet& landmarks, const PartIndexMap& parts,
                                           const CanonicalFrame& frame = {});

/// Resamples the image with bilinear interpolation (edge clamped) into the
/// canonical frame. Throws DegenerateLandmarks for coincident eyes or zero
/// chin-eyebrow distance.
NormalizedFace normalize_geometry(const LandmarkSet& landmarks, const GrayImage& image, const PartIndexMap& parts,
                                  const CanonicalFrame& frame = {});
NormalizedFace normalize_geometry(const FaceRecord& face, const GrayImage& image, const PartIndexMap& parts,
                                  const CanonicalFrame& frame = {});

/// Vertical chin-to-eyebrow span of a landmark set in its own frame.
double chin_to_brow_distance(const LandmarkSet& landmarks, const PartIndexMap& parts);

using Histogram = std::array<double, 256>;

Histogram histogram(const GrayImage& image);
Histogram histogram(const GrayImage& image, const PixelMask& mask);

/// Monotone level mapping from a source to a target histogram. Each source
/// level is sent to the first target level whose CDF reaches the source
/// level's mid-CDF. The table is non-decreasing over all 256 levels.
std::array<std::uint8_t, 256> specification_lut(const Histogram& source, const Histogram& target);

/// Histogram specification (CDF matching) of a whole image.
GrayImage equalize_to_reference(const GrayImage& image, const GrayImage& reference);

/// Face-only variant: pixels outside each face's landmark hull are set to
/// black and the level mapping is computed from in-hull pixels only.
NormalizedFace equalize_face(const NormalizedFace& face, const NormalizedFace& reference);

PixelMask face_mask(const NormalizedFace& face);

/// Geometric normalization of every manifest face, then (optionally)
/// face-only histogram matching to the manifest's reference face. Parallel
/// over faces; output order follows the manifest.
std::vector<NormalizedFace> preprocess_manifest(const DatasetManifest& manifest, bool equalize = true, int jobs = 1);

/// 1-D earth mover's distance between two normalized histograms (levels as
/// unit-spaced bins).
double earth_movers_distance(const Histogram& a, const Histogram& b);

}  // namespace cfk
