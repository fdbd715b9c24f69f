#include "peatwht/network.hpp"

#include <cmath>

#include "peatwht/rng.hpp"

namespace peatwht {

namespace {

template <typename T>
Tensor<T> fan_in_uniform(Rng& rng, Shape shape, std::size_t fan_in) {
  Tensor<T> t(std::move(shape));
  const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
void accumulate(Tensor<T>& into, const Tensor<T>& g) {
  if (into.empty()) {
    into = g;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) into[i] += g[i];
}

[[noreturn]] void not_executable(const LayerDescriptor& l) {
  throw Error(ErrorCode::InvalidDescriptor,
              "layer " + l.name + " (" + std::string(to_string(l.kind)) + ") cannot be executed by the toy engine");
}

}  // namespace

template <typename T>
Network<T>::Network(ArchDescriptor descriptor, std::uint64_t seed) : descriptor_(std::move(descriptor)), seed_(seed) {
  validate(descriptor_);
  Rng rng(seed);
  for (const auto& l : descriptor_.layers) {
    switch (l.kind) {
      case LayerKind::Conv:
        if (l.kernel != 3 || l.stride != 1 || l.bias) not_executable(l);
        parameters_.emplace(l.name + ".weight",
                            fan_in_uniform<T>(rng, {3, 3, l.in_channels, l.out_channels}, 9 * l.in_channels));
        break;
      case LayerKind::Pointwise:
        if (l.bias) not_executable(l);
        parameters_.emplace(l.name + ".weight", fan_in_uniform<T>(rng, {l.in_channels, l.out_channels}, l.in_channels));
        break;
      case LayerKind::Dense:
        parameters_.emplace(l.name + ".weight", fan_in_uniform<T>(rng, {l.in_channels, l.out_channels}, l.in_channels));
        if (l.bias) parameters_.emplace(l.name + ".bias", Tensor<T>({l.out_channels}));
        break;
      case LayerKind::Wht:
        parameters_.emplace(l.name + ".scale", Tensor<T>({l.in_channels}, T(1)));
        (l.threshold_trainable ? parameters_ : buffers_).emplace(l.name + ".lambda", Tensor<T>({1}));
        break;
      case LayerKind::Gain:
        parameters_.emplace(l.name, Tensor<T>({1}, T(1)));
        break;
      case LayerKind::AddSkip:
        if (l.projection) not_executable(l);
        break;
      case LayerKind::AvgPool:
        if (l.kernel != l.stride) not_executable(l);
        break;
      case LayerKind::Relu:
      case LayerKind::Gap:
        break;
      case LayerKind::MaxPool:
      case LayerKind::BatchNorm:
        not_executable(l);
    }
  }
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, t] : parameters_) total += t.size();
  return total;
}

template <typename T>
const Tensor<T>& Network<T>::tensor(const std::string& name) const {
  if (auto it = parameters_.find(name); it != parameters_.end()) return it->second;
  if (auto it = buffers_.find(name); it != buffers_.end()) return it->second;
  throw Error(ErrorCode::TensorShapeMismatch, "missing tensor " + name);
}

template <typename T>
WhtLayerParams<T> Network<T>::wht_params(const LayerDescriptor& l) const {
  const Tensor<T>& scale = tensor(l.name + ".scale");
  WhtLayerParams<T> p{scale.values(), tensor(l.name + ".lambda")[0], l.threshold_trainable};
  p.clamp_threshold();
  return p;
}

template <typename T>
ForwardTrace<T> Network<T>::forward(const Tensor<T>& x) const {
  if (descriptor_.input_size != 0) {
    require_shape(x.shape(), {descriptor_.input_size, descriptor_.input_size, descriptor_.input_channels},
                  "network input");
  }
  const auto& layers = descriptor_.layers;
  ForwardTrace<T> trace;
  trace.input_shape = x.shape();
  trace.outputs.reserve(layers.size());
  trace.caches.reserve(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerDescriptor& l = layers[i];
    const Tensor<T>& in = i == 0 ? x : trace.outputs[i - 1];
    switch (l.kind) {
      case LayerKind::Conv: {
        auto io = conv3x3_forward(in, tensor(l.name + ".weight"), 1);
        trace.outputs.push_back(std::move(io.output));
        trace.caches.emplace_back(std::move(io.cache));
        break;
      }
      case LayerKind::Pointwise: {
        auto io = pointwise_forward(in, tensor(l.name + ".weight"));
        trace.outputs.push_back(std::move(io.output));
        trace.caches.emplace_back(std::move(io.cache));
        break;
      }
      case LayerKind::Dense: {
        auto io = dense_forward(in, tensor(l.name + ".weight"), l.bias ? tensor(l.name + ".bias") : Tensor<T>());
        trace.outputs.push_back(std::move(io.output));
        trace.caches.emplace_back(std::move(io.cache));
        break;
      }
      case LayerKind::Wht: {
        auto io = wht_layer_forward(in, wht_params(l));
        trace.outputs.push_back(std::move(io.output));
        trace.caches.emplace_back(std::move(io.cache));
        break;
      }
      case LayerKind::Relu: {
        auto io = relu_forward(in);
        trace.outputs.push_back(std::move(io.output));
        trace.caches.emplace_back(std::move(io.cache));
        break;
      }
      case LayerKind::Gap: {
        auto io = gap_forward(in);
        trace.outputs.push_back(std::move(io.output));
        trace.caches.emplace_back(std::move(io.cache));
        break;
      }
      case LayerKind::AvgPool: {
        auto io = avgpool_forward(in, l.kernel);
        trace.outputs.push_back(std::move(io.output));
        trace.caches.emplace_back(std::move(io.cache));
        break;
      }
      case LayerKind::Gain: {
        auto io = gain_forward(in, tensor(l.name));
        trace.outputs.push_back(std::move(io.output));
        trace.caches.emplace_back(std::move(io.cache));
        break;
      }
      case LayerKind::AddSkip: {
        const Tensor<T>& skip = l.skip_from < 0 ? x : trace.outputs[static_cast<std::size_t>(l.skip_from)];
        require_shape(skip.shape(), in.shape(), "residual add");
        Tensor<T> y = in;
        for (std::size_t k = 0; k < y.size(); ++k) y[k] += skip[k];
        trace.outputs.push_back(std::move(y));
        trace.caches.emplace_back(std::monostate{});
        break;
      }
      case LayerKind::MaxPool:
      case LayerKind::BatchNorm:
        not_executable(l);
    }
  }
  return trace;
}

template <typename T>
TensorMap<T> Network<T>::backward(const ForwardTrace<T>& trace, const Tensor<T>& dlogits) const {
  const auto& layers = descriptor_.layers;
  if (trace.outputs.size() != layers.size()) throw Error(ErrorCode::CacheMissing, "incomplete forward trace");
  require_shape(dlogits.shape(), trace.logits().shape(), "logit gradient");
  std::vector<Tensor<T>> grad(layers.size());
  grad.back() = dlogits;
  Tensor<T> grad_input;
  TensorMap<T> out;

  auto send = [&](int target, const Tensor<T>& g) { accumulate(target < 0 ? grad_input : grad[static_cast<std::size_t>(target)], g); };

  for (std::size_t idx = layers.size(); idx-- > 0;) {
    const LayerDescriptor& l = layers[idx];
    const int prev = static_cast<int>(idx) - 1;
    const Tensor<T>& dy = grad[idx];
    if (dy.empty()) continue;  // no path to the loss
    const auto& cache = trace.caches[idx];
    switch (l.kind) {
      case LayerKind::Conv: {
        auto g = conv3x3_backward(std::get<Conv3x3Cache<T>>(cache), dy);
        out[l.name + ".weight"] = std::move(g.dweights);
        send(prev, g.dx);
        break;
      }
      case LayerKind::Pointwise: {
        auto g = pointwise_backward(std::get<PointwiseCache<T>>(cache), dy);
        out[l.name + ".weight"] = std::move(g.dweights);
        send(prev, g.dx);
        break;
      }
      case LayerKind::Dense: {
        auto g = dense_backward(std::get<DenseCache<T>>(cache), dy);
        out[l.name + ".weight"] = std::move(g.dweights);
        if (l.bias) out[l.name + ".bias"] = std::move(g.dbias);
        send(prev, g.dx);
        break;
      }
      case LayerKind::Wht: {
        auto g = wht_layer_backward(std::get<WhtCache<T>>(cache), dy, l.threshold_trainable);
        const std::size_t n = g.dscale.size();
        out[l.name + ".scale"] = Tensor<T>({n}, std::move(g.dscale));
        if (l.threshold_trainable) out[l.name + ".lambda"] = Tensor<T>({1}, std::vector<T>{g.dlambda});
        send(prev, g.dx);
        break;
      }
      case LayerKind::Relu:
        send(prev, relu_backward(std::get<ReluCache<T>>(cache), dy));
        break;
      case LayerKind::Gap:
        send(prev, gap_backward(std::get<ShapeCache>(cache), dy));
        break;
      case LayerKind::AvgPool:
        send(prev, avgpool_backward(std::get<ShapeCache>(cache), dy, l.kernel));
        break;
      case LayerKind::Gain: {
        auto g = gain_backward(std::get<GainCache<T>>(cache), dy);
        out[l.name] = std::move(g.dgain);
        send(prev, g.dx);
        break;
      }
      case LayerKind::AddSkip:
        send(prev, dy);
        send(l.skip_from, dy);
        break;
      case LayerKind::MaxPool:
      case LayerKind::BatchNorm:
        not_executable(l);
    }
  }
  for (const auto& [name, t] : parameters_) {
    if (!out.contains(name)) out[name] = Tensor<T>(t.shape());
  }
  return out;
}

template <typename T>
Network<T> build_toy_net(ToyVariant variant, std::size_t width, std::size_t input_size, std::uint64_t seed) {
  return Network<T>(toy_descriptor(variant, width, input_size), seed);
}

template <typename T>
std::vector<T> forward_classify(const Network<T>& net, const Tensor<T>& patch) {
  const Tensor<T> logits = net.logits(patch);
  return softmax<T>(logits.data());
}

template class Network<float>;
template class Network<double>;
template Network<float> build_toy_net(ToyVariant, std::size_t, std::size_t, std::uint64_t);
template Network<double> build_toy_net(ToyVariant, std::size_t, std::size_t, std::uint64_t);
template std::vector<float> forward_classify(const Network<float>&, const Tensor<float>&);
template std::vector<double> forward_classify(const Network<double>&, const Tensor<double>&);

}  // namespace peatwht
