#pragma once

// Block grid over a high-resolution frame, overlapping 2x2-block windows,
// per-window fire scores and the red/green overlay.
//
// A frame of M_i x N_i pixels holds R = floor(M_i / M_b) by
// C = floor(N_i / N_b) blocks. The window anchored at block (r, c) covers
// that block and its right, bottom and bottom-right neighbours, so there are
// (R - 1) * (C - 1) windows. Pixels past the R x C block area are dropped.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "peatwht/image.hpp"
#include "peatwht/network.hpp"
#include "peatwht/tensor.hpp"

namespace peatwht {

inline constexpr std::size_t kDefaultBlock = 224;

struct GridSpec {
  std::size_t image_height = 0;  // M_i
  std::size_t image_width = 0;   // N_i
  std::size_t block_height = kDefaultBlock;  // M_b
  std::size_t block_width = kDefaultBlock;   // N_b
  std::size_t rows = 0;  // R
  std::size_t cols = 0;  // C

  std::size_t window_count() const noexcept { return rows < 2 || cols < 2 ? 0 : (rows - 1) * (cols - 1); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Throws BlockLargerThanImage when either count would be zero, BadConfig on
/// zero extents.
GridSpec grid_dims(std::size_t image_height, std::size_t image_width, std::size_t block_height = kDefaultBlock,
                   std::size_t block_width = kDefaultBlock);

template <typename T>
struct Window {
  std::size_t row = 0;
  std::size_t col = 0;
  Tensor<T> pixels;  // 2 M_b x 2 N_b x C
};

/// The single window anchored at block (row, col).
template <typename T>
Tensor<T> extract_window(const Tensor<T>& image, const GridSpec& spec, std::size_t row, std::size_t col);

/// All windows in row-major anchor order. Throws DegenerateGrid when
/// R < 2 or C < 2.
template <typename T>
std::vector<Window<T>> extract_windows(const Tensor<T>& image, const GridSpec& spec);

/// 2x2 mean pooling per channel. Throws OddDimensions.
template <typename T>
Tensor<T> downsample_window(const Tensor<T>& window);

/// Box-filter resampling to out_h x out_w; each output pixel is the
/// coverage-weighted mean of the source pixels under it. Integer factors
/// reduce to plain block means.
template <typename T>
Tensor<T> resize_area(const Tensor<T>& image, std::size_t out_height, std::size_t out_width);

struct ScoreGrid {
  GridSpec spec;
  std::size_t score_rows = 0;  // R - 1, or 1 for the whole-image fallback
  std::size_t score_cols = 0;
  std::vector<double> scores;  // row-major fire probabilities
  double threshold = 0.5;
  bool fallback = false;

  double at(std::size_t r, std::size_t c) const { return scores.at(r * score_cols + c); }
  bool any_detection() const;
};

/// Scores every window: downsample_window, resample to the network input,
/// and take the fire probability. Throws DegenerateGrid.
template <typename T>
ScoreGrid score_grid(const Network<T>& net, const Tensor<T>& image, const GridSpec& spec, double threshold = 0.5);

/// Classifies the R x C block area as one patch. Used when the grid has
/// fewer than two block rows or columns.
template <typename T>
ScoreGrid score_whole_image(const Network<T>& net, const Tensor<T>& image, const GridSpec& spec,
                            double threshold = 0.5);

struct OverlayOptions {
  std::size_t border = 3;
  bool digits = false;  // burn 5x7 bitmap probabilities into each box
};

struct Overlay {
  RgbImage image;
  std::vector<std::uint8_t> annotated;  // 1 per pixel that was drawn on
};

/// Draws a border inside every block of the R x C area: red when the
/// anchored window scores >= threshold, green otherwise, and gray for the
/// last block row and column, which anchor no window. Every other pixel is
/// copied unchanged.
Overlay render_overlay(const RgbImage& image, const ScoreGrid& grid, const OverlayOptions& options = {});

inline constexpr std::uint8_t kNoFireColor[3] = {0, 255, 0};
inline constexpr std::uint8_t kFireColor[3] = {255, 0, 0};
inline constexpr std::uint8_t kEdgeColor[3] = {160, 160, 160};

/// {"image", "block", "grid", "threshold", "fallback", "scores"} with scores
/// row-major at 6 decimal places.
std::string score_grid_json(const ScoreGrid& grid, const std::string& image_path);

}  // namespace peatwht
