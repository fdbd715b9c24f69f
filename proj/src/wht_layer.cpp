#include "peatwht/wht_layer.hpp"

#include <cmath>
#include <string>

#include "peatwht/fwht.hpp"

namespace peatwht {

template <typename T>
WhtLayerParams<T> WhtLayerParams<T>::identity(std::size_t channels) {
  if (!is_power_of_two(channels)) {
    throw Error(ErrorCode::ChannelCountNotPowerOfTwo, "channels " + std::to_string(channels));
  }
  return WhtLayerParams{std::vector<T>(channels, T(1)), T(0), false};
}

template <typename T>
WhtLayerOutput<T> wht_layer_forward(const Tensor<T>& x, const WhtLayerParams<T>& params) {
  if (x.rank() != 3) {
    throw Error(ErrorCode::ShapeMismatch, "wht layer input must be H x W x C, got " + shape_to_string(x.shape()));
  }
  const std::size_t n = x.dim(2);
  if (!is_power_of_two(n)) {
    throw Error(ErrorCode::ChannelCountNotPowerOfTwo, "channels " + std::to_string(n));
  }
  if (params.scale.size() != n) {
    throw Error(ErrorCode::ShapeMismatch,
                "scale length " + std::to_string(params.scale.size()) + " for " + std::to_string(n) + " channels");
  }
  const std::size_t positions = x.dim(0) * x.dim(1);
  WhtLayerOutput<T> out{Tensor<T>(x.shape()), WhtCache<T>{x, Tensor<T>(x.shape()), {}, params.scale, true}};
  auto& cache = out.cache;
  cache.pass.assign(x.size(), 0);
  for (std::size_t p = 0; p < positions; ++p) {
    const std::size_t base = p * n;
    fwht_inplace(StridedView<T>(cache.spectrum.data().data() + base, n));
    T* u = cache.scaled.data().data() + base;
    T* y = out.output.data().data() + base;
    for (std::size_t k = 0; k < n; ++k) {
      u[k] = params.scale[k] * cache.spectrum[base + k];
      const bool keep = std::abs(u[k]) >= params.lambda;
      cache.pass[base + k] = keep ? 1 : 0;
      y[k] = keep ? u[k] : T(0);
    }
    ifwht_inplace(StridedView<T>(y, n));
  }
  return out;
}

template <typename T>
WhtLayerGrads<T> wht_layer_backward(const WhtCache<T>& cache, const Tensor<T>& dy, bool threshold_trainable) {
  if (!cache.valid) throw Error(ErrorCode::CacheMissing, "wht layer backward without a forward cache");
  require_shape(dy.shape(), cache.spectrum.shape(), "wht layer upstream gradient");
  const std::size_t n = cache.scale.size();
  const std::size_t positions = dy.size() / n;
  WhtLayerGrads<T> g{Tensor<T>(dy.shape()), std::vector<T>(n, T(0)), T(0)};
  std::vector<T> dv(n);
  for (std::size_t p = 0; p < positions; ++p) {
    const std::size_t base = p * n;
    // y = H v / N and H is symmetric, so dv = H dy / N.
    std::copy_n(dy.data().begin() + static_cast<std::ptrdiff_t>(base), n, dv.begin());
    ifwht_inplace(std::span<T>(dv));
    T* dx = g.dx.data().data() + base;
    for (std::size_t k = 0; k < n; ++k) {
      if (!cache.pass[base + k]) {
        dx[k] = T(0);
        continue;
      }
      const T du = dv[k];
      g.dscale[k] += du * cache.spectrum[base + k];
      dx[k] = cache.scale[k] * du;
      if (threshold_trainable) {
        const T u = cache.scaled[base + k];
        g.dlambda -= (u > T(0) ? du : (u < T(0) ? -du : T(0)));
      }
    }
    fwht_inplace(StridedView<T>(dx, n));
  }
  return g;
}

template struct WhtLayerParams<float>;
template struct WhtLayerParams<double>;
template WhtLayerOutput<float> wht_layer_forward(const Tensor<float>&, const WhtLayerParams<float>&);
template WhtLayerOutput<double> wht_layer_forward(const Tensor<double>&, const WhtLayerParams<double>&);
template WhtLayerGrads<float> wht_layer_backward(const WhtCache<float>&, const Tensor<float>&, bool);
template WhtLayerGrads<double> wht_layer_backward(const WhtCache<double>&, const Tensor<double>&, bool);

}  // namespace peatwht
