#include "peatwht/tiling.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>

namespace peatwht {

GridSpec grid_dims(std::size_t image_height, std::size_t image_width, std::size_t block_height,
                   std::size_t block_width) {
  if (image_height == 0 || image_width == 0 || block_height == 0 || block_width == 0) {
    throw Error(ErrorCode::BadConfig, "image and block extents must be positive");
  }
  GridSpec spec{image_height, image_width, block_height, block_width, image_height / block_height,
                image_width / block_width};
  if (spec.rows == 0 || spec.cols == 0) {
    throw Error(ErrorCode::BlockLargerThanImage, fmt::format("{}x{} block does not fit a {}x{} image", block_height,
                                                             block_width, image_height, image_width));
  }
  return spec;
}

namespace {

template <typename T>
void check_image(const Tensor<T>& image, const GridSpec& spec) {
  const Shape& shape = image.shape();
  if (shape.size() != 3 || shape[0] != spec.image_height || shape[1] != spec.image_width) {
    throw Error(ErrorCode::ShapeMismatch, fmt::format("image {} does not match grid over {}x{}",
                                                      shape_to_string(shape), spec.image_height, spec.image_width));
  }
}

template <typename T>
Tensor<T> crop(const Tensor<T>& image, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) {
  const std::size_t c = image.dim(2);
  Tensor<T> out({h, w, c});
  for (std::size_t y = 0; y < h; ++y) {
    const T* src = &image.at(y0 + y, x0, 0);
    std::copy(src, src + w * c, &out.at(y, 0, 0));
  }
  return out;
}

template <typename T>
Tensor<T> to_network_input(const Network<T>& net, const Tensor<T>& patch) {
  const std::size_t n = net.descriptor().input_size;
  if (n == 0 || (patch.dim(0) == n && patch.dim(1) == n)) return patch;
  return resize_area(patch, n, n);
}

}  // namespace

template <typename T>
Tensor<T> extract_window(const Tensor<T>& image, const GridSpec& spec, std::size_t row, std::size_t col) {
  check_image(image, spec);
  if (row + 1 >= spec.rows || col + 1 >= spec.cols) {
    throw Error(ErrorCode::DegenerateGrid, fmt::format("no window anchored at block ({}, {}) of a {}x{} grid", row,
                                                       col, spec.rows, spec.cols));
  }
  return crop(image, row * spec.block_height, col * spec.block_width, 2 * spec.block_height, 2 * spec.block_width);
}

template <typename T>
std::vector<Window<T>> extract_windows(const Tensor<T>& image, const GridSpec& spec) {
  if (spec.rows < 2 || spec.cols < 2) {
    throw Error(ErrorCode::DegenerateGrid, fmt::format("{}x{} block grid has no 2x2 window", spec.rows, spec.cols));
  }
  std::vector<Window<T>> windows;
  windows.reserve(spec.window_count());
  for (std::size_t r = 0; r + 1 < spec.rows; ++r) {
    for (std::size_t c = 0; c + 1 < spec.cols; ++c) windows.push_back({r, c, extract_window(image, spec, r, c)});
  }
  return windows;
}

template <typename T>
Tensor<T> downsample_window(const Tensor<T>& window) {
  if (window.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "window must be H x W x C");
  if (window.dim(0) % 2 != 0 || window.dim(1) % 2 != 0) {
    throw Error(ErrorCode::OddDimensions, "window " + shape_to_string(window.shape()));
  }
  return avgpool_forward(window, 2).output;
}

template <typename T>
Tensor<T> resize_area(const Tensor<T>& image, std::size_t out_height, std::size_t out_width) {
  if (image.rank() != 3 || out_height == 0 || out_width == 0) {
    throw Error(ErrorCode::ShapeMismatch, "resize_area needs an H x W x C image and positive output extent");
  }
  const std::size_t in_h = image.dim(0), in_w = image.dim(1), ch = image.dim(2);
  if (in_h % out_height == 0 && in_w % out_width == 0 && in_h / out_height == in_w / out_width) {
    return avgpool_forward(image, in_h / out_height).output;
  }
  // Overlap of source cell [i, i+1) with output cell [o*s, (o+1)*s).
  auto weights = [](std::size_t in, std::size_t out) {
    std::vector<std::vector<std::pair<std::size_t, double>>> w(out);
    const double s = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t o = 0; o < out; ++o) {
      const double lo = static_cast<double>(o) * s, hi = lo + s;
      for (auto i = static_cast<std::size_t>(std::floor(lo)); i < in && static_cast<double>(i) < hi; ++i) {
        const double overlap = std::min(hi, static_cast<double>(i + 1)) - std::max(lo, static_cast<double>(i));
        if (overlap > 0.0) w[o].emplace_back(i, overlap / s);
      }
    }
    return w;
  };
  const auto wy = weights(in_h, out_height);
  const auto wx = weights(in_w, out_width);
  Tensor<T> out({out_height, out_width, ch});
  std::vector<double> acc(ch);
  for (std::size_t oy = 0; oy < out_height; ++oy) {
    for (std::size_t ox = 0; ox < out_width; ++ox) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (const auto& [iy, fy] : wy[oy]) {
        for (const auto& [ix, fx] : wx[ox]) {
          const T* src = &image.at(iy, ix, 0);
          for (std::size_t k = 0; k < ch; ++k) acc[k] += fy * fx * static_cast<double>(src[k]);
        }
      }
      for (std::size_t k = 0; k < ch; ++k) out.at(oy, ox, k) = static_cast<T>(acc[k]);
    }
  }
  return out;
}

bool ScoreGrid::any_detection() const {
  return std::any_of(scores.begin(), scores.end(), [&](double s) { return s >= threshold; });
}

template <typename T>
ScoreGrid score_grid(const Network<T>& net, const Tensor<T>& image, const GridSpec& spec, double threshold) {
  if (spec.rows < 2 || spec.cols < 2) {
    throw Error(ErrorCode::DegenerateGrid, fmt::format("{}x{} block grid has no 2x2 window", spec.rows, spec.cols));
  }
  check_image(image, spec);
  ScoreGrid grid{spec, spec.rows - 1, spec.cols - 1, {}, threshold, false};
  grid.scores.resize(grid.score_rows * grid.score_cols);
  for (std::size_t r = 0; r < grid.score_rows; ++r) {
    for (std::size_t c = 0; c < grid.score_cols; ++c) {
      const Tensor<T> patch = to_network_input(net, downsample_window(extract_window(image, spec, r, c)));
      grid.scores[r * grid.score_cols + c] = static_cast<double>(forward_classify(net, patch)[kFireClass]);
    }
  }
  return grid;
}

template <typename T>
ScoreGrid score_whole_image(const Network<T>& net, const Tensor<T>& image, const GridSpec& spec, double threshold) {
  check_image(image, spec);
  const Tensor<T> area = crop(image, 0, 0, spec.rows * spec.block_height, spec.cols * spec.block_width);
  const std::size_t n = net.descriptor().input_size;
  const Tensor<T> patch = n == 0 ? area : resize_area(area, n, n);
  ScoreGrid grid{spec, 1, 1, {static_cast<double>(forward_classify(net, patch)[kFireClass])}, threshold, true};
  return grid;
}

namespace {

// 5x7 glyphs, one byte per row, bit 4 = leftmost column.
constexpr std::array<std::array<std::uint8_t, 7>, 11> kGlyphs = {{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C},  // .
}};

struct Canvas {
  Overlay& overlay;
  std::size_t height, width;

  void paint(std::size_t y, std::size_t x, const std::uint8_t* color) {
    if (y >= height || x >= width) return;
    std::copy(color, color + 3, overlay.image.at(y, x));
    overlay.annotated[y * width + x] = 1;
  }

  void box(std::size_t y0, std::size_t x0, std::size_t h, std::size_t w, std::size_t border, const std::uint8_t* color) {
    for (std::size_t y = y0; y < y0 + h; ++y) {
      for (std::size_t x = x0; x < x0 + w; ++x) {
        const bool edge = y < y0 + border || y + border >= y0 + h || x < x0 + border || x + border >= x0 + w;
        if (edge) paint(y, x, color);
      }
    }
  }

  void text(std::size_t y0, std::size_t x0, const std::string& s, std::size_t scale, const std::uint8_t* color) {
    std::size_t x = x0;
    for (const char ch : s) {
      const std::size_t g = ch == '.' ? 10 : static_cast<std::size_t>(ch - '0');
      if (g > 10) continue;
      for (std::size_t row = 0; row < 7; ++row) {
        for (std::size_t col = 0; col < 5; ++col) {
          if (!(kGlyphs[g][row] & (0x10 >> col))) continue;
          for (std::size_t dy = 0; dy < scale; ++dy) {
            for (std::size_t dx = 0; dx < scale; ++dx) paint(y0 + row * scale + dy, x + col * scale + dx, color);
          }
        }
      }
      x += 6 * scale;
    }
  }
};

}  // namespace

Overlay render_overlay(const RgbImage& image, const ScoreGrid& grid, const OverlayOptions& options) {
  const GridSpec& spec = grid.spec;
  if (image.height != spec.image_height || image.width != spec.image_width) {
    throw Error(ErrorCode::ShapeMismatch, "overlay image does not match the score grid");
  }
  Overlay overlay{image, std::vector<std::uint8_t>(image.height * image.width, 0)};
  Canvas canvas{overlay, image.height, image.width};
  const std::size_t bh = spec.block_height, bw = spec.block_width;
  const std::size_t border = std::min({options.border, bh / 2, bw / 2});

  if (grid.fallback) {
    const double s = grid.scores.at(0);
    const auto* color = s >= grid.threshold ? kFireColor : kNoFireColor;
    canvas.box(0, 0, spec.rows * bh, spec.cols * bw, border, color);
    if (options.digits) canvas.text(border + 2, border + 2, fmt::format("{:.2f}", s), 2, color);
    return overlay;
  }
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.cols; ++c) {
      const bool anchored = r < grid.score_rows && c < grid.score_cols;
      const auto* color = kEdgeColor;
      if (anchored) color = grid.at(r, c) >= grid.threshold ? kFireColor : kNoFireColor;
      canvas.box(r * bh, c * bw, bh, bw, border, color);
      if (anchored && options.digits) {
        canvas.text(r * bh + border + 2, c * bw + border + 2, fmt::format("{:.2f}", grid.at(r, c)), 2, color);
      }
    }
  }
  return overlay;
}

std::string score_grid_json(const ScoreGrid& grid, const std::string& image_path) {
  std::string escaped;
  for (const char ch : image_path) {
    if (ch == '"' || ch == '\\') escaped += '\\';
    escaped += ch;
  }
  std::string out = fmt::format(
      "{{\n  \"image\": \"{}\",\n  \"block\": [{}, {}],\n  \"grid\": [{}, {}],\n  \"threshold\": {:.6f},\n"
      "  \"fallback\": {},\n  \"scores\": [",
      escaped, grid.spec.block_height, grid.spec.block_width, grid.spec.rows, grid.spec.cols, grid.threshold,
      grid.fallback ? "true" : "false");
  for (std::size_t r = 0; r < grid.score_rows; ++r) {
    out += r ? ",\n    [" : "\n    [";
    for (std::size_t c = 0; c < grid.score_cols; ++c) out += fmt::format("{}{:.6f}", c ? ", " : "", grid.at(r, c));
    out += "]";
  }
  out += "\n  ]\n}\n";
  return out;
}

#define PEATWHT_INSTANTIATE_TILING(T)                                                                      \
  template Tensor<T> extract_window(const Tensor<T>&, const GridSpec&, std::size_t, std::size_t);        \
  template std::vector<Window<T>> extract_windows(const Tensor<T>&, const GridSpec&);                     \
  template Tensor<T> downsample_window(const Tensor<T>&);                                                 \
  template Tensor<T> resize_area(const Tensor<T>&, std::size_t, std::size_t);                             \
  template ScoreGrid score_grid(const Network<T>&, const Tensor<T>&, const GridSpec&, double);            \
  template ScoreGrid score_whole_image(const Network<T>&, const Tensor<T>&, const GridSpec&, double);

PEATWHT_INSTANTIATE_TILING(float)
PEATWHT_INSTANTIATE_TILING(double)

#undef PEATWHT_INSTANTIATE_TILING

}  // namespace peatwht
