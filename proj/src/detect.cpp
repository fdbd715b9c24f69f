#include "peatwht/pipeline.hpp"

namespace peatwht {

template <typename T>
Detection detect(const Network<T>& net, const RgbImage& image, double threshold, std::size_t block,
                 const OverlayOptions& overlay) {
  const GridSpec spec = grid_dims(image.height, image.width, block, block);
  const Tensor<T> pixels = to_tensor<T>(image);
  ScoreGrid grid = (spec.rows < 2 || spec.cols < 2) ? score_whole_image(net, pixels, spec, threshold)
                                                    : score_grid(net, pixels, spec, threshold);
  Overlay rendered = render_overlay(image, grid, overlay);
  return {std::move(grid), std::move(rendered)};
}

template Detection detect(const Network<float>&, const RgbImage&, double, std::size_t, const OverlayOptions&);
template Detection detect(const Network<double>&, const RgbImage&, double, std::size_t, const OverlayOptions&);

}  // namespace peatwht
