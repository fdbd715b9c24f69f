#pragma once

// Executable networks instantiated from an ArchDescriptor.

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "peatwht/arch.hpp"
#include "peatwht/nn.hpp"
#include "peatwht/tensor.hpp"
#include "peatwht/wht_layer.hpp"

namespace peatwht {

template <typename T>
using TensorMap = std::map<std::string, Tensor<T>>;

template <typename T>
using LayerCache = std::variant<std::monostate, Conv3x3Cache<T>, PointwiseCache<T>, DenseCache<T>, ReluCache<T>,
                                ShapeCache, GainCache<T>, WhtCache<T>>;

template <typename T>
struct ForwardTrace {
  std::vector<Tensor<T>> outputs;  // one per layer; back() holds the logits
  std::vector<LayerCache<T>> caches;
  Shape input_shape;

  const Tensor<T>& logits() const { return outputs.back(); }
};

/// Parameters are the trainable tensors; buffers hold fixed state that still
/// travels with checkpoints (the WHT thresholds when they are not trained).
///
/// Tensor names: `<layer>.weight`, `<layer>.bias`, `<wht>.scale`,
/// `<wht>.lambda`, and `<block>.gain` for gains.
template <typename T>
class Network {
 public:
  Network() = default;

  /// Instantiates every tensor, drawing weights from a seeded fan-in-scaled
  /// uniform distribution; WHT scales start at 1 and thresholds at 0.
  Network(ArchDescriptor descriptor, std::uint64_t seed);

  const ArchDescriptor& descriptor() const noexcept { return descriptor_; }
  std::uint64_t seed() const noexcept { return seed_; }

  TensorMap<T>& parameters() noexcept { return parameters_; }
  const TensorMap<T>& parameters() const noexcept { return parameters_; }
  TensorMap<T>& buffers() noexcept { return buffers_; }
  const TensorMap<T>& buffers() const noexcept { return buffers_; }

  /// Sum of trainable tensor sizes.
  std::size_t parameter_count() const;

  ForwardTrace<T> forward(const Tensor<T>& x) const;
  Tensor<T> logits(const Tensor<T>& x) const { return forward(x).logits(); }

  /// Gradients of every trainable tensor given dL/dlogits.
  TensorMap<T> backward(const ForwardTrace<T>& trace, const Tensor<T>& dlogits) const;

  /// Same descriptor and seed with every tensor converted to U.
  template <typename U>
  Network<U> cast() const {
    Network<U> out;
    out.descriptor_ = descriptor_;
    out.seed_ = seed_;
    for (const auto& [k, v] : parameters_) out.parameters_.emplace(k, v.template cast<U>());
    for (const auto& [k, v] : buffers_) out.buffers_.emplace(k, v.template cast<U>());
    return out;
  }

 private:
  template <typename>
  friend class Network;

  WhtLayerParams<T> wht_params(const LayerDescriptor& l) const;
  const Tensor<T>& tensor(const std::string& name) const;

  ArchDescriptor descriptor_;
  std::uint64_t seed_ = 0;
  TensorMap<T> parameters_;
  TensorMap<T> buffers_;
};

template <typename T>
Network<T> build_toy_net(ToyVariant variant, std::size_t width, std::size_t input_size, std::uint64_t seed);

/// Softmax of the logits: [p(no fire), p(fire)]. The patch must be
/// input_size x input_size x 3.
template <typename T>
std::vector<T> forward_classify(const Network<T>& net, const Tensor<T>& patch);

/// Index of the class-1 ("fire") probability.
inline constexpr std::size_t kFireClass = 1;

}  // namespace peatwht
