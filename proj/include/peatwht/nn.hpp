#pragma once

// Forward/backward kernels for the layers used by the toy residual networks.
// Every feature map is a single sample laid out H x W x C; batching is done
// by the trainer through sequential gradient accumulation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "peatwht/tensor.hpp"

namespace peatwht {

template <typename T, typename Cache>
struct LayerIO {
  Tensor<T> output;
  Cache cache;
};

// --- 3x3 convolution, padding 1, no bias. Weights: 3 x 3 x Cin x Cout. ---

template <typename T>
struct Conv3x3Cache {
  Tensor<T> x;
  Tensor<T> weights;
  std::size_t stride = 1;
};

template <typename T>
struct Conv3x3Grads {
  Tensor<T> dx;
  Tensor<T> dweights;
};

template <typename T>
LayerIO<T, Conv3x3Cache<T>> conv3x3_forward(const Tensor<T>& x, const Tensor<T>& weights, std::size_t stride = 1);

template <typename T>
Conv3x3Grads<T> conv3x3_backward(const Conv3x3Cache<T>& cache, const Tensor<T>& dy);

// --- 1x1 convolution, no bias. Weights: Cin x Cout. ---

template <typename T>
struct PointwiseCache {
  Tensor<T> x;
  Tensor<T> weights;
};

template <typename T>
struct PointwiseGrads {
  Tensor<T> dx;
  Tensor<T> dweights;
};

template <typename T>
LayerIO<T, PointwiseCache<T>> pointwise_forward(const Tensor<T>& x, const Tensor<T>& weights);

template <typename T>
PointwiseGrads<T> pointwise_backward(const PointwiseCache<T>& cache, const Tensor<T>& dy);

// --- Fully connected. Input is flattened; weights In x Out; bias Out or empty. ---

template <typename T>
struct DenseCache {
  Tensor<T> x;
  Tensor<T> weights;
  bool has_bias = false;
};

template <typename T>
struct DenseGrads {
  Tensor<T> dx;
  Tensor<T> dweights;
  Tensor<T> dbias;  // empty when the layer has no bias
};

template <typename T>
LayerIO<T, DenseCache<T>> dense_forward(const Tensor<T>& x, const Tensor<T>& weights, const Tensor<T>& bias);

template <typename T>
DenseGrads<T> dense_backward(const DenseCache<T>& cache, const Tensor<T>& dy);

// --- Elementwise and pooling. ---

template <typename T>
struct ReluCache {
  Tensor<T> x;
};

template <typename T>
LayerIO<T, ReluCache<T>> relu_forward(const Tensor<T>& x);

/// Gradient is masked where the input is <= 0.
template <typename T>
Tensor<T> relu_backward(const ReluCache<T>& cache, const Tensor<T>& dy);

struct ShapeCache {
  Shape input_shape;
};

/// Global average pooling: H x W x C -> C.
template <typename T>
LayerIO<T, ShapeCache> gap_forward(const Tensor<T>& x);

template <typename T>
Tensor<T> gap_backward(const ShapeCache& cache, const Tensor<T>& dy);

/// Non-overlapping k x k mean pooling. H and W must be multiples of k.
template <typename T>
LayerIO<T, ShapeCache> avgpool_forward(const Tensor<T>& x, std::size_t factor = 2);

template <typename T>
Tensor<T> avgpool_backward(const ShapeCache& cache, const Tensor<T>& dy, std::size_t factor = 2);

/// y = g * x with a single learnable scalar g (shape {1}).
template <typename T>
struct GainCache {
  Tensor<T> x;
  T gain = T(1);
};

template <typename T>
struct GainGrads {
  Tensor<T> dx;
  Tensor<T> dgain;
};

template <typename T>
LayerIO<T, GainCache<T>> gain_forward(const Tensor<T>& x, const Tensor<T>& gain);

template <typename T>
GainGrads<T> gain_backward(const GainCache<T>& cache, const Tensor<T>& dy);

// --- Loss. ---

template <typename T>
std::vector<T> softmax(std::span<const T> logits);

template <typename T>
struct LossResult {
  T loss = T(0);
  Tensor<T> dlogits;
};

/// -log softmax(logits)[label] and its gradient softmax - onehot.
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t label);

// --- Optimizer. ---

struct TrainConfig {
  std::size_t epochs = 25;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// velocity <- momentum * velocity - lr * grad; param <- param + velocity.
template <typename T>
void sgd_step(std::span<T> params, std::span<const T> grads, std::span<T> velocity, const TrainConfig& config);

// --- Gradient checking. ---

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

/// Central differences of `loss` around `point`, compared to `analytic`.
/// Relative error uses max(1, |analytic|, |numeric|) as the denominator.
GradCheckReport gradient_check(const std::function<double(std::span<const double>)>& loss,
                               std::span<const double> point, std::span<const double> analytic,
                               double epsilon = 1e-5);

}  // namespace peatwht
