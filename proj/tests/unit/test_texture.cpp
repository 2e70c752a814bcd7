#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cfk/error.hpp"
#include "cfk/texture.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cfk;

TEST_CASE("LBP codes match the nested-loop reference bit for bit") {
  std::mt19937_64 rng(64);
  for (int trial = 0; trial < 20; ++trial) {
    GrayImage img = fixtures::random_image(64, 64, rng);
    if (trial % 4 == 0) {
      // Coarse quantization makes neighbor ties common.
      for (auto& p : img.pixels) p = static_cast<std::uint8_t>(p / 64 * 64);
    }
    const GrayImage codes = lbp_codes(img);
    const std::vector<int> expected = oracle::lbp_reference(img);
    REQUIRE(codes.pixels.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (codes.pixels[i] != expected[i]) {
        FAIL_CHECK("code mismatch at pixel " << i);
        break;
      }
    }
  }
}

TEST_CASE("pyramid tiles cover the image once per grid") {
  const auto tiles = pyramid_tiles(320, 400);
  CHECK(tiles.size() == 83);
  std::size_t offset = 0;
  for (int g : {3, 5, 7}) {
    long area = 0;
    for (int t = 0; t < g * g; ++t) area += static_cast<long>(tiles[offset + t].width()) * tiles[offset + t].height();
    CHECK(area == 320L * 400L);
    offset += static_cast<std::size_t>(g * g);
  }
  CHECK(tiles[0] == Tile{0, 0, 106, 133});
}

TEST_CASE("LBP histograms: 1328 values, each tile sums to one") {
  std::mt19937_64 rng(3);
  const GrayImage img = fixtures::random_image(320, 400, rng);
  const auto h = lbp_features(img);
  REQUIRE(h.size() == 1328);
  for (std::size_t t = 0; t < 83; ++t) {
    const double s = std::accumulate(h.begin() + t * 16, h.begin() + (t + 1) * 16, 0.0);
    CHECK(std::fabs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("constant image: every LBP tile histogram is one-hot on code 15") {
  const auto h = lbp_features(GrayImage(50, 50, 77));
  for (std::size_t t = 0; t < 83; ++t) {
    for (std::size_t b = 0; b < 16; ++b) CHECK(h[t * 16 + b] == (b == 15 ? 1.0 : 0.0));
  }
}

TEST_CASE("tiles smaller than 3x3 are rejected") {
  for (auto* fn : {+[](const GrayImage& i) { lbp_features(i); }, +[](const GrayImage& i) { hog_features(i); }}) {
    try {
      fn(GrayImage(20, 20, 1));
      FAIL("expected ImageTooSmall");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ImageTooSmall);
    }
  }
}

TEST_CASE("HOG layout dimension") {
  const HogConfig cfg;
  CHECK(cfg.blocks_per_side() == 1);
  CHECK(cfg.dim_per_tile() == 32);
  CHECK(cfg.dim() == 2656);
  std::mt19937_64 rng(1);
  CHECK(hog_features(fixtures::random_image(320, 400, rng)).size() == 2656);
  HogConfig bad;
  bad.block_cells = 3;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("HOG of a constant image is all zeros") {
  for (double v : hog_features(GrayImage(100, 120, 140))) CHECK(v == 0.0);
}

TEST_CASE("vertical step edge puts its gradient energy in the horizontal-gradient bin") {
  GrayImage img(90, 90, 20);
  for (int y = 0; y < 90; ++y) {
    for (int x = 45; x < 90; ++x) img.at(x, y) = 220;
  }
  const HogConfig cfg;
  const GradientField field = gradient_field(img, cfg.bins);
  const auto cells = hog_cell_histograms(field, Tile{0, 0, 90, 90}, cfg);
  double total = 0.0, bin0 = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    total += cells[i];
    if (i % cfg.bins == 0) bin0 += cells[i];
  }
  REQUIRE(total > 0.0);
  CHECK(bin0 / total > 0.9);
}

TEST_CASE("cell histogram mass equals gradient magnitude within the tile") {
  std::mt19937_64 rng(17);
  const GrayImage img = fixtures::random_image(70, 55, rng);
  const HogConfig cfg;
  const GradientField field = gradient_field(img, cfg.bins);
  for (const Tile& tile : pyramid_tiles(70, 55)) {
    const auto cells = hog_cell_histograms(field, tile, cfg);
    double mass = std::accumulate(cells.begin(), cells.end(), 0.0);
    double expected = 0.0;
    for (int y = tile.y0; y < tile.y1; ++y) {
      for (int x = tile.x0; x < tile.x1; ++x) expected += field.magnitude[static_cast<std::size_t>(y) * 70 + x];
    }
    CHECK(std::fabs(mass - expected) < 1e-6);
  }
}
