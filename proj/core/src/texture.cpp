#include "cfk/texture.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cfk/error.hpp"

namespace cfk {

std::vector<Tile> pyramid_tiles(int width, int height, const std::vector<int>& grids) {
  std::vector<Tile> tiles;
  for (int g : grids) {
    if (g < 1) throw Error(ErrorCode::InvalidArgument, "grid size must be positive");
    for (int i = 0; i < g; ++i) {
      for (int j = 0; j < g; ++j) {
        tiles.push_back({static_cast<int>(static_cast<long>(j) * width / g), static_cast<int>(static_cast<long>(i) * height / g),
                         static_cast<int>(static_cast<long>(j + 1) * width / g),
                         static_cast<int>(static_cast<long>(i + 1) * height / g)});
      }
    }
  }
  return tiles;
}

namespace {

void check_tiles(const std::vector<Tile>& tiles, int min_side) {
  for (const auto& t : tiles) {
    if (t.width() < min_side || t.height() < min_side) {
      throw Error(ErrorCode::ImageTooSmall, "tile of " + std::to_string(t.width()) + "x" +
                                                std::to_string(t.height()) + " px is below the " +
                                                std::to_string(min_side) + "x" + std::to_string(min_side) +
                                                " minimum");
    }
  }
}

}  // namespace

GrayImage lbp_codes(const GrayImage& image) {
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "LBP of an empty image");
  GrayImage codes(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const int c = image.at(x, y);
      std::uint8_t code = 0;
      if (image.clamped(x, y - 1) >= c) code |= 1;
      if (image.clamped(x + 1, y) >= c) code |= 2;
      if (image.clamped(x, y + 1) >= c) code |= 4;
      if (image.clamped(x - 1, y) >= c) code |= 8;
      codes.at(x, y) = code;
    }
  }
  return codes;
}

std::vector<double> lbp_features(const GrayImage& image, const std::vector<int>& grids) {
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "LBP of an empty image");
  const auto tiles = pyramid_tiles(image.width, image.height, grids);
  check_tiles(tiles, 3);
  const GrayImage codes = lbp_codes(image);
  std::vector<double> out;
  out.reserve(tiles.size() * kLbpBins);
  for (const auto& t : tiles) {
    std::array<double, kLbpBins> h{};
    for (int y = t.y0; y < t.y1; ++y) {
      for (int x = t.x0; x < t.x1; ++x) h[codes.at(x, y)] += 1.0;
    }
    const double n = static_cast<double>(t.width()) * t.height();
    for (double v : h) out.push_back(v / n);
  }
  return out;
}

std::size_t HogConfig::blocks_per_side() const {
  return static_cast<std::size_t>((cells_per_side - block_cells) / block_stride + 1);
}

std::size_t HogConfig::dim_per_tile() const {
  const std::size_t b = blocks_per_side();
  return b * b * static_cast<std::size_t>(block_cells * block_cells * bins);
}

std::size_t HogConfig::dim() const {
  std::size_t tiles = 0;
  for (int g : grids) tiles += static_cast<std::size_t>(g * g);
  return tiles * dim_per_tile();
}

void HogConfig::validate() const {
  if (grids.empty() || cells_per_side < 1 || block_cells < 1 || block_cells > cells_per_side || block_stride < 1 ||
      bins < 1 || !(clip > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid HOG layout");
  }
  for (int g : grids) {
    if (g < 1) throw Error(ErrorCode::InvalidArgument, "invalid HOG grid");
  }
}

GradientField gradient_field(const GrayImage& image, int bins) {
  GradientField f;
  f.width = image.width;
  f.height = image.height;
  f.magnitude.resize(image.size());
  f.bin.resize(image.size());
  const double width = std::numbers::pi / bins;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double gx = static_cast<double>(image.clamped(x + 1, y)) - image.clamped(x - 1, y);
      const double gy = static_cast<double>(image.clamped(x, y + 1)) - image.clamped(x, y - 1);
      const std::size_t i = static_cast<std::size_t>(y) * image.width + x;
      f.magnitude[i] = std::hypot(gx, gy);
      double angle = std::atan2(gy, gx);
      if (angle < 0.0) angle += std::numbers::pi;
      int b = static_cast<int>(angle / width);
      if (b >= bins) b -= bins;  // angle == pi folds onto bin 0
      f.bin[i] = b;
    }
  }
  return f;
}

std::vector<double> hog_cell_histograms(const GradientField& field, const Tile& tile, const HogConfig& config) {
  const int c = config.cells_per_side;
  std::vector<double> hist(static_cast<std::size_t>(c * c * config.bins), 0.0);
  for (int cy = 0; cy < c; ++cy) {
    const int y0 = tile.y0 + cy * tile.height() / c;
    const int y1 = tile.y0 + (cy + 1) * tile.height() / c;
    for (int cx = 0; cx < c; ++cx) {
      const int x0 = tile.x0 + cx * tile.width() / c;
      const int x1 = tile.x0 + (cx + 1) * tile.width() / c;
      double* h = &hist[static_cast<std::size_t>((cy * c + cx) * config.bins)];
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * field.width + x;
          h[field.bin[i]] += field.magnitude[i];
        }
      }
    }
  }
  return hist;
}

std::vector<double> hog_features(const GrayImage& image, const HogConfig& config) {
  config.validate();
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "HOG of an empty image");
  const auto tiles = pyramid_tiles(image.width, image.height, config.grids);
  check_tiles(tiles, std::max(3, config.cells_per_side));
  const GradientField field = gradient_field(image, config.bins);
  const int c = config.cells_per_side;
  const int bc = config.block_cells;
  const std::size_t nb = config.blocks_per_side();
  std::vector<double> out;
  out.reserve(config.dim());
  std::vector<double> block;
  for (const auto& t : tiles) {
    const auto cells = hog_cell_histograms(field, t, config);
    for (std::size_t by = 0; by < nb; ++by) {
      for (std::size_t bx = 0; bx < nb; ++bx) {
        block.clear();
        for (int y = 0; y < bc; ++y) {
          for (int x = 0; x < bc; ++x) {
            const std::size_t cy = by * config.block_stride + y, cx = bx * config.block_stride + x;
            const double* h = &cells[(cy * c + cx) * config.bins];
            block.insert(block.end(), h, h + config.bins);
          }
        }
        // L2-Hys; an all-zero block stays zero.
        auto normalize = [&] {
          double ss = 0.0;
          for (double v : block) ss += v * v;
          const double norm = std::sqrt(ss);
          if (norm > 0.0) {
            for (double& v : block) v /= norm;
          }
        };
        normalize();
        for (double& v : block) v = std::min(v, config.clip);
        normalize();
        out.insert(out.end(), block.begin(), block.end());
      }
    }
  }
  return out;
}

}  // namespace cfk
