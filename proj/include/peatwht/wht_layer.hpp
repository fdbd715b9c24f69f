#pragma once

// Transform-domain layer: forward WHT along channels, element-wise
// trainable scaling, hard thresholding, inverse WHT.
//
// At every spatial position with channel vector x (length N = 2^m):
//   s = H x,  u = scale * s,  v = u * [|u| >= lambda],  y = H v / N.
// With scale = 1 and lambda = 0 the layer is the identity. With lambda = 0
// and scale = H h it computes the dyadic convolution of x with h.

#include <cstddef>
#include <vector>

#include "peatwht/tensor.hpp"

namespace peatwht {

template <typename T>
struct WhtLayerParams {
  std::vector<T> scale;  // one value per transform bin
  T lambda = T(0);       // kept >= 0
  bool threshold_trainable = false;

  static WhtLayerParams identity(std::size_t channels);

  /// N, plus one when the threshold is trainable.
  std::size_t parameter_count() const noexcept { return scale.size() + (threshold_trainable ? 1 : 0); }

  void clamp_threshold() noexcept {
    if (lambda < T(0)) lambda = T(0);
  }
};

template <typename T>
struct WhtCache {
  Tensor<T> spectrum;  // H x per position
  Tensor<T> scaled;    // u
  std::vector<unsigned char> pass;  // 1 where |u| >= lambda
  std::vector<T> scale;
  bool valid = false;
};

template <typename T>
struct WhtLayerOutput {
  Tensor<T> output;
  WhtCache<T> cache;
};

template <typename T>
struct WhtLayerGrads {
  Tensor<T> dx;
  std::vector<T> dscale;
  T dlambda = T(0);  // zero unless the threshold is trainable
};

/// Throws ChannelCountNotPowerOfTwo, or ShapeMismatch when the scale length
/// differs from the channel count.
template <typename T>
WhtLayerOutput<T> wht_layer_forward(const Tensor<T>& x, const WhtLayerParams<T>& params);

/// Straight-through backward: the pass mask is held constant. When the
/// threshold is trainable its gradient uses the soft-threshold surrogate
/// dv/dlambda = -sign(u) on passing bins.
template <typename T>
WhtLayerGrads<T> wht_layer_backward(const WhtCache<T>& cache, const Tensor<T>& dy, bool threshold_trainable = false);

/// Parameters of a bias-free 3x3 convolution with the same channel width.
constexpr std::size_t conv3x3_parameter_count(std::size_t channels) noexcept { return 9 * channels * channels; }

}  // namespace peatwht
