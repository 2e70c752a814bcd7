#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cfk/error.hpp"
#include "cfk/preprocess.hpp"
#include "cfk/synthetic.hpp"
#include "fixtures.hpp"

using namespace cfk;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double max_landmark_gap(const LandmarkSet& a, const LandmarkSet& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < kLandmarkCount; ++i) worst = std::max(worst, distance(a[i], b[i]));
  return worst;
}

SimilarityTransform random_transform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-40.0, 40.0), scale(0.5, 2.5), shift(-200.0, 200.0);
  return {angle(rng) * kDeg, scale(rng), shift(rng), shift(rng)};
}

}  // namespace

TEST_CASE("similarity transform inverse and composition") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const SimilarityTransform t = random_transform(rng);
    const SimilarityTransform u = random_transform(rng);
    const Point2 p{static_cast<double>(i) * 3.7 - 40.0, 12.5 - i};
    const Point2 round = t.inverse().apply(t.apply(p));
    CHECK(distance(round, p) < 1e-9);
    const Point2 composed = t.compose(u).apply(p);
    CHECK(distance(composed, t.apply(u.apply(p))) < 1e-9);
    CHECK(distance(t.compose(t.inverse()).apply(p), p) < 1e-9);
  }
}

TEST_CASE("already-canonical face gives the identity transform") {
  const PartIndexMap parts = PartIndexMap::defaults();
  const SimilarityTransform t = estimate_normalization(canonical_template(), parts);
  CHECK(std::fabs(t.rotation) < 1e-9);
  CHECK(std::fabs(t.scale - 1.0) < 1e-9);
  CHECK(std::fabs(t.dx) < 1e-9);
  CHECK(std::fabs(t.dy) < 1e-9);
  CHECK(chin_to_brow_distance(canonical_template(), parts) == doctest::Approx(250.0).epsilon(1e-12));
}

TEST_CASE("a rotated, scaled, shifted canonical face is mapped back onto the template") {
  const PartIndexMap parts = PartIndexMap::defaults();
  const SimilarityTransform pose{10.0 * kDeg, 1.3, 35.0, -20.0};
  const LandmarkSet posed = pose.apply(canonical_template());
  const GrayImage image(480, 600, 90);
  const NormalizedFace n = normalize_geometry(posed, image, parts);
  CHECK(max_landmark_gap(n.landmarks, canonical_template()) < 0.5);
  CHECK(n.image.width == 320);
  CHECK(n.image.height == 400);
}

TEST_CASE("normalized faces have a 250 px chin-to-eyebrow span and the eye midpoint at the origin") {
  SyntheticOptions o;
  o.n_per_class = 25;
  o.effect = 2.0;
  o.seed = 5;
  const SyntheticDataset data = generate_synthetic(o);
  const PartIndexMap& parts = data.manifest.part_index_map;
  for (const auto& n : fixtures::normalized_synthetic(data)) {
    CHECK(std::fabs(chin_to_brow_distance(n.landmarks, parts) - 250.0) < 0.5);
    const Point2 left = centroid(n.landmarks.select(parts.left_eye));
    const Point2 right = centroid(n.landmarks.select(parts.right_eye));
    CHECK(distance(0.5 * (left + right), Point2{160.0, 140.0}) < 0.5);
    CHECK(std::fabs(left.y - right.y) < 1e-6);
  }
}

TEST_CASE("normalization is equivariant to input similarity transforms") {
  SyntheticOptions o;
  o.n_per_class = 1;
  o.render_images = false;
  Rng shape_rng(3);
  const LandmarkSet face = synthetic_shape(1, o, shape_rng);
  const PartIndexMap parts = PartIndexMap::defaults();
  const LandmarkSet base = estimate_normalization(face, parts).apply(face);
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    const LandmarkSet moved = random_transform(rng).apply(face);
    const LandmarkSet again = estimate_normalization(moved, parts).apply(moved);
    CHECK(max_landmark_gap(again, base) < 0.5);
  }
}

TEST_CASE("coincident chin and eyebrows are degenerate") {
  LandmarkSet flat = canonical_template();
  for (auto& p : flat.points) p.y = 100.0;
  try {
    normalize_geometry(flat, GrayImage(10, 10), PartIndexMap::defaults());
    FAIL("expected DegenerateLandmarks");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateLandmarks);
  }
}

TEST_CASE("histogram specification against itself is the identity and idempotent") {
  std::mt19937_64 rng(4);
  const GrayImage img = fixtures::random_image(64, 48, rng);
  CHECK(equalize_to_reference(img, img) == img);
  const GrayImage ref = fixtures::random_image(30, 30, rng);
  const GrayImage once = equalize_to_reference(img, ref);
  CHECK(equalize_to_reference(once, ref) == once);
  CHECK(once.width == img.width);
  CHECK(once.height == img.height);
}

TEST_CASE("constant image against a uniform reference lands on the median level") {
  const GrayImage constant(16, 16, 50);
  GrayImage uniform(256, 1);
  for (int v = 0; v < 256; ++v) uniform.at(v, 0) = static_cast<std::uint8_t>(v);
  // mid-CDF of the single source level is 0.5; the uniform CDF first reaches
  // 0.5 at level 127 (128/256).
  const GrayImage out = equalize_to_reference(constant, uniform);
  for (auto v : out.pixels) CHECK(v == 127);
}

TEST_CASE("histogram matching is monotone and never moves away from the reference") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    GrayImage img(40, 40);
    std::normal_distribution<double> g(80.0 + trial * 4, 20.0);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(std::clamp(std::lround(g(rng)), 0L, 255L));
    const GrayImage ref = fixtures::random_image(50, 20, rng);
    const auto lut = specification_lut(histogram(img), histogram(ref));
    for (int v = 1; v < 256; ++v) CHECK(lut[v - 1] <= lut[v]);
    const GrayImage out = equalize_to_reference(img, ref);
    for (std::size_t i = 1; i < img.pixels.size(); ++i) {
      if (img.pixels[i - 1] < img.pixels[i]) CHECK(out.pixels[i - 1] <= out.pixels[i]);
    }
    const auto normalize = [](Histogram h) {
      double s = 0;
      for (double v : h) s += v;
      for (double& v : h) v /= s;
      return h;
    };
    const Histogram href = normalize(histogram(ref));
    CHECK(earth_movers_distance(normalize(histogram(out)), href) <=
          earth_movers_distance(normalize(histogram(img)), href) + 1e-12);
  }
}

TEST_CASE("empty images are rejected") {
  try {
    equalize_to_reference(GrayImage(), GrayImage(2, 2));
    FAIL("expected EmptyImage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyImage);
  }
}

TEST_CASE("face-only matching blacks out the background and preprocessing ignores jobs") {
  SyntheticOptions o;
  o.n_per_class = 4;
  o.seed = 12;
  const SyntheticDataset data = generate_synthetic(o);
  fixtures::TempDir dir("pre");
  write_synthetic(data, dir.path());
  const DatasetManifest m = load_manifest(dir / "manifest.json");
  const auto serial = preprocess_manifest(m, true, 1);
  const auto parallel = preprocess_manifest(m, true, 3);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].image == parallel[i].image);
    const PixelMask mask = face_mask(serial[i]);
    for (std::size_t p = 0; p < mask.inside.size(); ++p) {
      if (!mask.inside[p]) CHECK(serial[i].image.pixels[p] == 0);
    }
  }
}
