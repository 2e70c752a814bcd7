#include "cfk/features.hpp"

#include <algorithm>
#include <cmath>

#include "cfk/error.hpp"

namespace cfk {

std::string_view to_string(FeatureFamily f) noexcept {
  switch (f) {
    case FeatureFamily::S: return "S";
    case FeatureFamily::I: return "I";
    case FeatureFamily::SI: return "SI";
    case FeatureFamily::SIex: return "SIex";
    case FeatureFamily::Mom: return "Mom";
    case FeatureFamily::LBP: return "LBP";
    case FeatureFamily::HOG: return "HOG";
    case FeatureFamily::CNN_A: return "CNN_A";
    case FeatureFamily::CNN_G: return "CNN_G";
    case FeatureFamily::CNN_F: return "CNN_F";
    case FeatureFamily::E: return "E";
    case FeatureFamily::N: return "N";
    case FeatureFamily::M: return "M";
    case FeatureFamily::C: return "C";
    case FeatureFamily::IP: return "IP";
    case FeatureFamily::ENMC: return "ENMC";
  }
  return "?";
}

FeatureFamily parse_family(std::string_view s) {
  std::string name(s);
  std::replace(name.begin(), name.end(), '-', '_');
  for (FeatureFamily f : kAllFamilies) {
    if (name == to_string(f)) return f;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown feature family '" + std::string(s) + "'");
}

bool is_ingested(FeatureFamily f) noexcept {
  return f == FeatureFamily::CNN_A || f == FeatureFamily::CNN_G || f == FeatureFamily::CNN_F;
}

std::size_t family_dim(FeatureFamily f, const HogConfig& hog) {
  switch (f) {
    case FeatureFamily::S: return 23;
    case FeatureFamily::I: return 31;
    case FeatureFamily::SI: return 54;
    case FeatureFamily::SIex: return 454;
    case FeatureFamily::Mom: return 6;
    case FeatureFamily::LBP: return 1328;
    case FeatureFamily::HOG: return hog.dim();
    case FeatureFamily::CNN_A: return 512;
    case FeatureFamily::CNN_G: return 512;
    case FeatureFamily::CNN_F: return 4096;
    case FeatureFamily::E: return 72;
    case FeatureFamily::N: return 66;
    case FeatureFamily::M: return 153;
    case FeatureFamily::C: return 105;
    case FeatureFamily::IP: return 21;
    case FeatureFamily::ENMC: return 396;
  }
  return 0;
}

ExtractionContext ExtractionContext::for_manifest(const DatasetManifest& manifest) {
  ExtractionContext ctx;
  ctx.parts = manifest.part_index_map;
  ctx.spec = MeasurementSpec::defaults(ctx.parts);
  ctx.topology = patch_topology(manifest.delaunay_subset);
  return ctx;
}

std::vector<double> pairwise_distances(const std::vector<Point2>& points) {
  std::vector<double> out;
  out.reserve(points.size() * (points.size() - (points.empty() ? 0 : 1)) / 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) out.push_back(distance(points[i], points[j]));
  }
  return out;
}

FeatureVector extract_spatial(const LandmarkSet& landmarks, const MeasurementSpec& spec) {
  spec.validate();
  FeatureVector v{FeatureFamily::S, {}};
  v.values.reserve(spec.spatial.size());
  for (const auto& d : spec.spatial) {
    v.values.push_back(distance(centroid(landmarks.select(d.from)), centroid(landmarks.select(d.to))));
  }
  return v;
}

namespace {

std::vector<Point2> hull_polygon(const std::vector<Point2>& points) {
  std::vector<Point2> polygon;
  for (std::size_t i : convex_hull(points)) polygon.push_back(points[i]);
  return polygon;
}

struct PatchSummary {
  double mean = 0.0, min = 0.0, max = 0.0;
};

PatchSummary summarize(const GrayImage& image, const std::vector<std::size_t>& pixels) {
  PatchSummary s;
  double sum = 0.0;
  std::uint8_t lo = 255, hi = 0;
  for (std::size_t px : pixels) {
    const std::uint8_t v = image.pixels[px];
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  s.mean = sum / static_cast<double>(pixels.size());
  s.min = lo;
  s.max = hi;
  return s;
}

}  // namespace

FeatureVector extract_intensity(const GrayImage& image, const LandmarkSet& landmarks, const MeasurementSpec& spec) {
  spec.validate();
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "intensity features need an image");
  FeatureVector v{FeatureFamily::I, {}};
  v.values.reserve(spec.intensity.size());
  // Definitions sharing a polygon are rasterized once.
  const std::vector<std::size_t>* last_polygon = nullptr;
  PatchSummary summary;
  for (const auto& d : spec.intensity) {
    if (last_polygon == nullptr || *last_polygon != d.polygon) {
      const auto pixels = rasterize_convex(hull_polygon(landmarks.select(d.polygon)), image.width, image.height);
      if (pixels.empty()) throw Error(ErrorCode::EmptyPatch, "patch '" + d.name + "' covers no pixel");
      summary = summarize(image, pixels);
      last_polygon = &d.polygon;
    }
    switch (d.stat) {
      case PatchStat::Mean: v.values.push_back(summary.mean); break;
      case PatchStat::Min: v.values.push_back(summary.min); break;
      case PatchStat::Max: v.values.push_back(summary.max); break;
    }
  }
  return v;
}

FeatureVector extract_si(const GrayImage& image, const LandmarkSet& landmarks, const MeasurementSpec& spec) {
  FeatureVector v = extract_spatial(landmarks, spec);
  const FeatureVector i = extract_intensity(image, landmarks, spec);
  v.family = FeatureFamily::SI;
  v.values.insert(v.values.end(), i.values.begin(), i.values.end());
  return v;
}

FeatureVector extract_siex(const GrayImage& image, const LandmarkSet& landmarks, const PatchTopology& topology) {
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "intensity features need an image");
  const std::vector<Point2> subset = landmarks.select(topology.subset);
  delaunay(subset);  // validates the configuration (DegenerateInput)
  FeatureVector v{FeatureFamily::SIex, pairwise_distances(subset)};

  std::vector<std::vector<Point2>> polygons;
  polygons.reserve(topology.patches.size());
  for (const auto& t : topology.patches) {
    std::vector<Point2> tri{landmarks[t[0]], landmarks[t[1]], landmarks[t[2]]};
    if (orient2d(tri[0], tri[1], tri[2]) < 0) std::swap(tri[1], tri[2]);
    polygons.push_back(std::move(tri));
  }
  const auto parts = rasterize_partition(polygons, image.width, image.height);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].empty()) {
      const Point2 c = centroid(polygons[k]);
      const double s = sample_bilinear(image, c.x, c.y);
      v.values.insert(v.values.end(), {s, s, s});
    } else {
      const PatchSummary s = summarize(image, parts[k]);
      v.values.insert(v.values.end(), {s.mean, s.min, s.max});
    }
  }
  return v;
}

Moments intensity_moments(const std::vector<double>& samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyPatch, "no pixels for intensity moments");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  std::array<double, 7> central{};  // central[k] = E[(x - mean)^k]
  for (double x : samples) {
    const double d = x - mean;
    double p = d * d;
    for (int k = 2; k <= 6; ++k) {
      central[k] += p;
      p *= d;
    }
  }
  for (int k = 2; k <= 6; ++k) central[k] /= n;
  Moments m;
  m.values[0] = mean;
  const double sd = std::sqrt(central[2]);
  m.values[1] = sd;
  // Relative guard: quantized constant images can leave round-off in central[2].
  if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
    m.values[1] = 0.0;
    m.zero_variance = true;
    return m;
  }
  for (int k = 3; k <= 6; ++k) m.values[k - 1] = central[k] / std::pow(sd, k);
  return m;
}

Moments extract_moments(const GrayImage& image, const PixelMask& mask) {
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "moments need an image");
  if (mask.width != image.width || mask.height != image.height) {
    throw Error(ErrorCode::DimMismatch, "mask size differs from image size");
  }
  std::vector<double> samples;
  samples.reserve(mask.count());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    if (mask.inside[i]) samples.push_back(image.pixels[i]);
  }
  return intensity_moments(samples);
}

FeatureVector extract_lbp(const GrayImage& image) { return {FeatureFamily::LBP, lbp_features(image)}; }

FeatureVector extract_hog(const GrayImage& image, const HogConfig& config) {
  return {FeatureFamily::HOG, hog_features(image, config)};
}

FeatureVector extract_part(const LandmarkSet& landmarks, const PartIndexMap& parts, FeatureFamily part) {
  FeatureVector v{part, {}};
  auto append = [&](const std::vector<std::size_t>& idx) {
    const auto d = pairwise_distances(landmarks.select(idx));
    v.values.insert(v.values.end(), d.begin(), d.end());
  };
  switch (part) {
    case FeatureFamily::E:
      append(parts.left_eye);
      append(parts.right_eye);
      break;
    case FeatureFamily::N: append(parts.nose); break;
    case FeatureFamily::M: append(parts.mouth); break;
    case FeatureFamily::C: append(parts.contour); break;
    default: throw Error(ErrorCode::InvalidArgument, "extract_part takes E, N, M or C");
  }
  return v;
}

FeatureVector extract_interpart(const LandmarkSet& landmarks, const PartIndexMap& parts) {
  std::vector<Point2> centers;
  for (const auto* idx : {&parts.left_eye, &parts.right_eye, &parts.nose, &parts.mouth, &parts.left_contour,
                          &parts.right_contour, &parts.chin}) {
    centers.push_back(centroid(landmarks.select(*idx)));
  }
  return {FeatureFamily::IP, pairwise_distances(centers)};
}

FeatureVector extract_enmc(const LandmarkSet& landmarks, const PartIndexMap& parts) {
  FeatureVector v{FeatureFamily::ENMC, {}};
  for (FeatureFamily f : {FeatureFamily::E, FeatureFamily::N, FeatureFamily::M, FeatureFamily::C}) {
    const auto part = extract_part(landmarks, parts, f);
    v.values.insert(v.values.end(), part.values.begin(), part.values.end());
  }
  return v;
}

FeatureVector extract(FeatureFamily family, const NormalizedFace& face, const ExtractionContext& ctx) {
  switch (family) {
    case FeatureFamily::S: return extract_spatial(face.landmarks, ctx.spec);
    case FeatureFamily::I: return extract_intensity(face.image, face.landmarks, ctx.spec);
    case FeatureFamily::SI: return extract_si(face.image, face.landmarks, ctx.spec);
    case FeatureFamily::SIex: return extract_siex(face.image, face.landmarks, ctx.topology);
    case FeatureFamily::Mom: {
      const Moments m = extract_moments(face.image, face_mask(face));
      return {FeatureFamily::Mom, std::vector<double>(m.values.begin(), m.values.end())};
    }
    case FeatureFamily::LBP: return extract_lbp(face.image);
    case FeatureFamily::HOG: return extract_hog(face.image, ctx.hog);
    case FeatureFamily::E:
    case FeatureFamily::N:
    case FeatureFamily::M:
    case FeatureFamily::C: return extract_part(face.landmarks, ctx.parts, family);
    case FeatureFamily::IP: return extract_interpart(face.landmarks, ctx.parts);
    case FeatureFamily::ENMC: return extract_enmc(face.landmarks, ctx.parts);
    case FeatureFamily::CNN_A:
    case FeatureFamily::CNN_G:
    case FeatureFamily::CNN_F: break;
  }
  throw Error(ErrorCode::InvalidArgument,
              std::string(to_string(family)) + " features are ingested from files, not extracted");
}

namespace {

void pair_names(std::vector<std::string>& out, const std::string& prefix, const std::vector<std::size_t>& idx) {
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = i + 1; j < idx.size(); ++j) {
      out.push_back(prefix + "_d" + std::to_string(idx[i]) + "_" + std::to_string(idx[j]));
    }
  }
}

}  // namespace

std::vector<std::string> feature_names(FeatureFamily family, const ExtractionContext& ctx) {
  std::vector<std::string> out;
  switch (family) {
    case FeatureFamily::S:
      for (const auto& d : ctx.spec.spatial) out.push_back("S_" + d.name);
      break;
    case FeatureFamily::I:
      for (const auto& d : ctx.spec.intensity) out.push_back("I_" + d.name);
      break;
    case FeatureFamily::SI:
      out = feature_names(FeatureFamily::S, ctx);
      for (auto& n : feature_names(FeatureFamily::I, ctx)) out.push_back(std::move(n));
      break;
    case FeatureFamily::SIex:
      pair_names(out, "SIex", ctx.topology.subset);
      for (std::size_t k = 0; k < ctx.topology.patches.size(); ++k) {
        for (const char* s : {"mean", "min", "max"}) out.push_back("SIex_patch" + std::to_string(k) + "_" + s);
      }
      break;
    case FeatureFamily::Mom:
      out = {"Mom_mean", "Mom_sd", "Mom_skewness", "Mom_kurtosis", "Mom_m5", "Mom_m6"};
      break;
    case FeatureFamily::LBP: {
      const auto tiles = pyramid_tiles(9, 9);  // only the count matters
      for (std::size_t t = 0; t < tiles.size(); ++t) {
        for (std::size_t b = 0; b < kLbpBins; ++b) out.push_back("LBP_t" + std::to_string(t) + "_c" + std::to_string(b));
      }
      break;
    }
    case FeatureFamily::HOG:
      for (std::size_t k = 0; k < ctx.hog.dim(); ++k) out.push_back("HOG_" + std::to_string(k));
      break;
    case FeatureFamily::E:
      pair_names(out, "E_left", ctx.parts.left_eye);
      pair_names(out, "E_right", ctx.parts.right_eye);
      break;
    case FeatureFamily::N: pair_names(out, "N", ctx.parts.nose); break;
    case FeatureFamily::M: pair_names(out, "M", ctx.parts.mouth); break;
    case FeatureFamily::C: pair_names(out, "C", ctx.parts.contour); break;
    case FeatureFamily::IP: {
      const char* names[] = {"left_eye", "right_eye", "nose", "mouth", "left_contour", "right_contour", "chin"};
      for (int i = 0; i < 7; ++i) {
        for (int j = i + 1; j < 7; ++j) out.push_back(std::string("IP_") + names[i] + "_" + names[j]);
      }
      break;
    }
    case FeatureFamily::ENMC:
      for (FeatureFamily f : {FeatureFamily::E, FeatureFamily::N, FeatureFamily::M, FeatureFamily::C}) {
        for (auto& n : feature_names(f, ctx)) out.push_back(std::move(n));
      }
      break;
    case FeatureFamily::CNN_A:
    case FeatureFamily::CNN_G:
    case FeatureFamily::CNN_F:
      for (std::size_t k = 0; k < family_dim(family); ++k) {
        out.push_back(std::string(to_string(family)) + "_" + std::to_string(k));
      }
      break;
  }
  return out;
}

}  // namespace cfk
