#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cfk/image.hpp"

namespace cfk {

/// Axis-aligned tile [x0, x1) x [y0, y1).
struct Tile {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  bool operator==(const Tile&) const = default;
};

/// Tiles of a g x g grid for every g in `grids`, grid by grid, row-major
/// within a grid. Tile (i, j) of a g-grid spans floor(j*W/g) .. floor((j+1)*W/g)
/// horizontally and likewise vertically.
std::vector<Tile> pyramid_tiles(int width, int height, const std::vector<int>& grids = {3, 5, 7});

/// 4-neighbor LBP code per pixel: bit0 = north (y-1), bit1 = east (x+1),
/// bit2 = south (y+1), bit3 = west (x-1); a bit is set when the neighbor is
/// >= the center. Borders replicate edge pixels. Values are 0..15.
GrayImage lbp_codes(const GrayImage& image);

inline constexpr std::size_t kLbpBins = 16;

/// 16-bin code histograms over the 3x3, 5x5 and 7x7 tilings (83 tiles),
/// each normalized to sum 1, concatenated: 1328 values. Throws ImageTooSmall
/// when any tile is smaller than 3x3 pixels.
std::vector<double> lbp_features(const GrayImage& image, const std::vector<int>& grids = {3, 5, 7});

/// HOG layout: each pyramid tile is divided into cells_per_side^2 cells; blocks
/// of block_cells^2 cells slide by block_stride cells; each block vector is
/// L2-Hys normalized (L2, clip at `clip`, renormalize). Orientation is unsigned
/// over [0, pi) in `bins` equal bins with hard assignment of the gradient
/// magnitude. The default layout gives 83 x 32 = 2656 values.
struct HogConfig {
  std::vector<int> grids{3, 5, 7};
  int cells_per_side = 2;
  int block_cells = 2;
  int block_stride = 1;
  int bins = 8;
  double clip = 0.2;

  std::size_t blocks_per_side() const;
  std::size_t dim_per_tile() const;
  std::size_t dim() const;
  /// Throws InvalidArgument for an inconsistent layout.
  void validate() const;
};

/// Per-pixel central-difference gradient (replicate borders):
/// gx = I(x+1,y) - I(x-1,y), gy = I(x,y+1) - I(x,y-1).
struct GradientField {
  int width = 0, height = 0;
  std::vector<double> magnitude;
  std::vector<int> bin;
};

GradientField gradient_field(const GrayImage& image, int bins);

/// Unnormalized cell histograms of one tile, cell-major (row-major cells),
/// `bins` values per cell.
std::vector<double> hog_cell_histograms(const GradientField& field, const Tile& tile, const HogConfig& config);

std::vector<double> hog_features(const GrayImage& image, const HogConfig& config = {});

}  // namespace cfk
