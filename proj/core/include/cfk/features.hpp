#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfk/delaunay.hpp"
#include "cfk/landmarks.hpp"
#include "cfk/measurement_spec.hpp"
#include "cfk/preprocess.hpp"
#include "cfk/texture.hpp"

namespace cfk {

enum class FeatureFamily { S, I, SI, SIex, Mom, LBP, HOG, CNN_A, CNN_G, CNN_F, E, N, M, C, IP, ENMC };

inline constexpr std::array<FeatureFamily, 16> kAllFamilies = {
    FeatureFamily::S,     FeatureFamily::I,     FeatureFamily::SI,    FeatureFamily::SIex,
    FeatureFamily::Mom,   FeatureFamily::LBP,   FeatureFamily::HOG,   FeatureFamily::CNN_A,
    FeatureFamily::CNN_G, FeatureFamily::CNN_F, FeatureFamily::E,     FeatureFamily::N,
    FeatureFamily::M,     FeatureFamily::C,     FeatureFamily::IP,    FeatureFamily::ENMC};

std::string_view to_string(FeatureFamily f) noexcept;
/// Accepts the names above; "CNN-A" style spellings are accepted too.
FeatureFamily parse_family(std::string_view s);

/// CNN families are ingested from files, never computed here.
bool is_ingested(FeatureFamily f) noexcept;

/// Declared dimensionality. HOG depends on the layout; CNN families are
/// 512 (A, G) and 4096 (F).
std::size_t family_dim(FeatureFamily f, const HogConfig& hog = {});

struct FeatureVector {
  FeatureFamily family = FeatureFamily::S;
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
};

/// Everything extraction needs besides the face itself.
struct ExtractionContext {
  PartIndexMap parts = PartIndexMap::defaults();
  MeasurementSpec spec = MeasurementSpec::defaults();
  PatchTopology topology = patch_topology(default_delaunay_subset());
  HogConfig hog;

  /// Context for a manifest's part map and Delaunay subset, with the default
  /// measurement spec derived from that part map.
  static ExtractionContext for_manifest(const DatasetManifest& manifest);
};

FeatureVector extract_spatial(const LandmarkSet& landmarks, const MeasurementSpec& spec);
/// Throws EmptyPatch when a patch covers no pixel center.
FeatureVector extract_intensity(const GrayImage& image, const LandmarkSet& landmarks, const MeasurementSpec& spec);
FeatureVector extract_si(const GrayImage& image, const LandmarkSet& landmarks, const MeasurementSpec& spec);

/// 325 pairwise distances over the subset (i < j in subset order), then
/// mean/min/max over each of the topology's 43 triangles. Triangles form an
/// exclusive partition (shared-edge pixels go to the lower patch id); a patch
/// left with no pixel center falls back to the bilinear sample at its
/// centroid. The face's own subset is triangulated as well so degenerate
/// landmark configurations raise DegenerateInput.
FeatureVector extract_siex(const GrayImage& image, const LandmarkSet& landmarks, const PatchTopology& topology);

/// Six moments of the in-hull intensity distribution: mean, standard
/// deviation (population), skewness, kurtosis (non-excess), and the 5th and
/// 6th standardized moments.
struct Moments {
  std::array<double, 6> values{};
  bool zero_variance = false;  // standardized moments undefined; emitted as 0
};

Moments intensity_moments(const std::vector<double>& samples);
Moments extract_moments(const GrayImage& image, const PixelMask& mask);

FeatureVector extract_lbp(const GrayImage& image);
FeatureVector extract_hog(const GrayImage& image, const HogConfig& config = {});

/// All pairwise distances within a part: E (both eyes, 72), N (66), M (153), C (105).
FeatureVector extract_part(const LandmarkSet& landmarks, const PartIndexMap& parts, FeatureFamily part);
/// 21 centroid distances among left eye, right eye, nose, mouth, left
/// contour, right contour, chin (pairs in that order, i < j).
FeatureVector extract_interpart(const LandmarkSet& landmarks, const PartIndexMap& parts);
FeatureVector extract_enmc(const LandmarkSet& landmarks, const PartIndexMap& parts);

/// Pairwise distances of a point list, (0,1), (0,2), ..., (n-2,n-1).
std::vector<double> pairwise_distances(const std::vector<Point2>& points);

/// Dispatch on family. Throws InvalidArgument for ingested (CNN) families.
FeatureVector extract(FeatureFamily family, const NormalizedFace& face, const ExtractionContext& ctx);

/// Column names, in extraction order.
std::vector<std::string> feature_names(FeatureFamily family, const ExtractionContext& ctx);

}  // namespace cfk
