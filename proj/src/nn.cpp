#include "peatwht/nn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace peatwht {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void require_rank3(const Shape& s, const char* what) {
  if (s.size() != 3) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": expected H x W x C, got " + shape_to_string(s));
  }
}

}  // namespace

template <typename T>
LayerIO<T, Conv3x3Cache<T>> conv3x3_forward(const Tensor<T>& x, const Tensor<T>& weights, std::size_t stride) {
  require_rank3(x.shape(), "conv3x3 input");
  const std::size_t h = x.dim(0), w = x.dim(1), cin = x.dim(2);
  if (weights.rank() != 4 || weights.dim(0) != 3 || weights.dim(1) != 3 || weights.dim(2) != cin) {
    throw Error(ErrorCode::ShapeMismatch,
                "conv3x3 weights " + shape_to_string(weights.shape()) + " for input " + shape_to_string(x.shape()));
  }
  if (stride == 0) throw Error(ErrorCode::ShapeMismatch, "conv3x3 stride 0");
  const std::size_t cout = weights.dim(3);
  const std::size_t ho = (h - 1) / stride + 1;
  const std::size_t wo = (w - 1) / stride + 1;
  Tensor<T> y({ho, wo, cout});
  const T* wd = weights.data().data();
  for (std::size_t oy = 0; oy < ho; ++oy) {
    for (std::size_t ox = 0; ox < wo; ++ox) {
      T* out = &y.at(oy, ox, 0);
      for (std::size_t ky = 0; ky < 3; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - 1;
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - 1;
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          const T* in = &x.at(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix), 0);
          const T* tap = wd + (ky * 3 + kx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const T xv = in[ci];
            const T* row = tap + ci * cout;
            for (std::size_t co = 0; co < cout; ++co) out[co] += xv * row[co];
          }
        }
      }
    }
  }
  return {std::move(y), Conv3x3Cache<T>{x, weights, stride}};
}

template <typename T>
Conv3x3Grads<T> conv3x3_backward(const Conv3x3Cache<T>& cache, const Tensor<T>& dy) {
  const Tensor<T>& x = cache.x;
  const std::size_t h = x.dim(0), w = x.dim(1), cin = x.dim(2);
  const std::size_t cout = cache.weights.dim(3);
  const std::size_t stride = cache.stride;
  const std::size_t ho = (h - 1) / stride + 1;
  const std::size_t wo = (w - 1) / stride + 1;
  require_shape(dy.shape(), {ho, wo, cout}, "conv3x3 upstream gradient");

  Conv3x3Grads<T> g{Tensor<T>(x.shape()), Tensor<T>(cache.weights.shape())};
  const T* wd = cache.weights.data().data();
  T* dwd = g.dweights.data().data();
  for (std::size_t oy = 0; oy < ho; ++oy) {
    for (std::size_t ox = 0; ox < wo; ++ox) {
      const T* up = &dy.at(oy, ox, 0);
      for (std::size_t ky = 0; ky < 3; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - 1;
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - 1;
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          const auto uy = static_cast<std::size_t>(iy), ux = static_cast<std::size_t>(ix);
          const T* in = &x.at(uy, ux, 0);
          T* din = &g.dx.at(uy, ux, 0);
          const std::size_t tap = (ky * 3 + kx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const T* row = wd + tap + ci * cout;
            T* drow = dwd + tap + ci * cout;
            const T xv = in[ci];
            T acc = T(0);
            for (std::size_t co = 0; co < cout; ++co) {
              acc += up[co] * row[co];
              drow[co] += xv * up[co];
            }
            din[ci] += acc;
          }
        }
      }
    }
  }
  return g;
}

template <typename T>
LayerIO<T, PointwiseCache<T>> pointwise_forward(const Tensor<T>& x, const Tensor<T>& weights) {
  require_rank3(x.shape(), "pointwise input");
  const std::size_t cin = x.dim(2);
  if (weights.rank() != 2 || weights.dim(0) != cin) {
    throw Error(ErrorCode::ShapeMismatch,
                "pointwise weights " + shape_to_string(weights.shape()) + " for input " + shape_to_string(x.shape()));
  }
  const std::size_t cout = weights.dim(1);
  const std::size_t positions = x.dim(0) * x.dim(1);
  Tensor<T> y({x.dim(0), x.dim(1), cout});
  const T* wd = weights.data().data();
  for (std::size_t p = 0; p < positions; ++p) {
    const T* in = x.data().data() + p * cin;
    T* out = y.data().data() + p * cout;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const T xv = in[ci];
      const T* row = wd + ci * cout;
      for (std::size_t co = 0; co < cout; ++co) out[co] += xv * row[co];
    }
  }
  return {std::move(y), PointwiseCache<T>{x, weights}};
}

template <typename T>
PointwiseGrads<T> pointwise_backward(const PointwiseCache<T>& cache, const Tensor<T>& dy) {
  const Tensor<T>& x = cache.x;
  const std::size_t cin = x.dim(2);
  const std::size_t cout = cache.weights.dim(1);
  require_shape(dy.shape(), {x.dim(0), x.dim(1), cout}, "pointwise upstream gradient");
  PointwiseGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(cache.weights.shape())};
  const std::size_t positions = x.dim(0) * x.dim(1);
  const T* wd = cache.weights.data().data();
  T* dwd = g.dweights.data().data();
  for (std::size_t p = 0; p < positions; ++p) {
    const T* in = x.data().data() + p * cin;
    const T* up = dy.data().data() + p * cout;
    T* din = g.dx.data().data() + p * cin;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const T* row = wd + ci * cout;
      T* drow = dwd + ci * cout;
      const T xv = in[ci];
      T acc = T(0);
      for (std::size_t co = 0; co < cout; ++co) {
        acc += up[co] * row[co];
        drow[co] += xv * up[co];
      }
      din[ci] = acc;
    }
  }
  return g;
}

template <typename T>
LayerIO<T, DenseCache<T>> dense_forward(const Tensor<T>& x, const Tensor<T>& weights, const Tensor<T>& bias) {
  const std::size_t in = x.size();
  if (weights.rank() != 2 || weights.dim(0) != in) {
    throw Error(ErrorCode::ShapeMismatch,
                "dense weights " + shape_to_string(weights.shape()) + " for input of " + std::to_string(in));
  }
  const std::size_t out = weights.dim(1);
  const bool has_bias = !bias.empty();
  if (has_bias) require_shape(bias.shape(), {out}, "dense bias");
  Tensor<T> y({out});
  if (has_bias) std::copy(bias.data().begin(), bias.data().end(), y.data().begin());
  for (std::size_t i = 0; i < in; ++i) {
    const T xv = x[i];
    const T* row = weights.data().data() + i * out;
    for (std::size_t o = 0; o < out; ++o) y[o] += xv * row[o];
  }
  return {std::move(y), DenseCache<T>{x, weights, has_bias}};
}

template <typename T>
DenseGrads<T> dense_backward(const DenseCache<T>& cache, const Tensor<T>& dy) {
  const std::size_t in = cache.x.size();
  const std::size_t out = cache.weights.dim(1);
  require_shape(dy.shape(), {out}, "dense upstream gradient");
  DenseGrads<T> g{Tensor<T>(cache.x.shape()), Tensor<T>(cache.weights.shape()),
                  cache.has_bias ? Tensor<T>({out}) : Tensor<T>()};
  for (std::size_t i = 0; i < in; ++i) {
    const T* row = cache.weights.data().data() + i * out;
    T* drow = g.dweights.data().data() + i * out;
    T acc = T(0);
    for (std::size_t o = 0; o < out; ++o) {
      acc += dy[o] * row[o];
      drow[o] = cache.x[i] * dy[o];
    }
    g.dx[i] = acc;
  }
  if (cache.has_bias) std::copy(dy.data().begin(), dy.data().end(), g.dbias.data().begin());
  return g;
}

template <typename T>
LayerIO<T, ReluCache<T>> relu_forward(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.values()) v = v > T(0) ? v : T(0);
  return {std::move(y), ReluCache<T>{x}};
}

template <typename T>
Tensor<T> relu_backward(const ReluCache<T>& cache, const Tensor<T>& dy) {
  require_shape(dy.shape(), cache.x.shape(), "relu upstream gradient");
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (cache.x[i] <= T(0)) dx[i] = T(0);
  }
  return dx;
}

template <typename T>
LayerIO<T, ShapeCache> gap_forward(const Tensor<T>& x) {
  require_rank3(x.shape(), "gap input");
  const std::size_t c = x.dim(2);
  const std::size_t positions = x.dim(0) * x.dim(1);
  Tensor<T> y({c});
  for (std::size_t p = 0; p < positions; ++p) {
    for (std::size_t k = 0; k < c; ++k) y[k] += x[p * c + k];
  }
  const T inv = T(1) / static_cast<T>(positions);
  for (auto& v : y.values()) v *= inv;
  return {std::move(y), ShapeCache{x.shape()}};
}

template <typename T>
Tensor<T> gap_backward(const ShapeCache& cache, const Tensor<T>& dy) {
  const std::size_t c = cache.input_shape.at(2);
  require_shape(dy.shape(), {c}, "gap upstream gradient");
  const std::size_t positions = cache.input_shape[0] * cache.input_shape[1];
  const T inv = T(1) / static_cast<T>(positions);
  Tensor<T> dx(cache.input_shape);
  for (std::size_t p = 0; p < positions; ++p) {
    for (std::size_t k = 0; k < c; ++k) dx[p * c + k] = dy[k] * inv;
  }
  return dx;
}

template <typename T>
LayerIO<T, ShapeCache> avgpool_forward(const Tensor<T>& x, std::size_t factor) {
  require_rank3(x.shape(), "avgpool input");
  if (factor == 0 || x.dim(0) % factor != 0 || x.dim(1) % factor != 0) {
    throw Error(ErrorCode::ShapeMismatch,
                "avgpool factor " + std::to_string(factor) + " does not divide " + shape_to_string(x.shape()));
  }
  const std::size_t ho = x.dim(0) / factor, wo = x.dim(1) / factor, c = x.dim(2);
  Tensor<T> y({ho, wo, c});
  const T inv = T(1) / static_cast<T>(factor * factor);
  for (std::size_t oy = 0; oy < ho; ++oy) {
    for (std::size_t ox = 0; ox < wo; ++ox) {
      T* out = &y.at(oy, ox, 0);
      for (std::size_t dy = 0; dy < factor; ++dy) {
        for (std::size_t dx = 0; dx < factor; ++dx) {
          const T* in = &x.at(oy * factor + dy, ox * factor + dx, 0);
          for (std::size_t k = 0; k < c; ++k) out[k] += in[k];
        }
      }
      for (std::size_t k = 0; k < c; ++k) out[k] *= inv;
    }
  }
  return {std::move(y), ShapeCache{x.shape()}};
}

template <typename T>
Tensor<T> avgpool_backward(const ShapeCache& cache, const Tensor<T>& dy, std::size_t factor) {
  const Shape& s = cache.input_shape;
  const std::size_t ho = s.at(0) / factor, wo = s.at(1) / factor, c = s.at(2);
  require_shape(dy.shape(), {ho, wo, c}, "avgpool upstream gradient");
  Tensor<T> dx(s);
  const T inv = T(1) / static_cast<T>(factor * factor);
  for (std::size_t iy = 0; iy < s[0]; ++iy) {
    for (std::size_t ix = 0; ix < s[1]; ++ix) {
      const T* up = &dy.at(iy / factor, ix / factor, 0);
      T* din = &dx.at(iy, ix, 0);
      for (std::size_t k = 0; k < c; ++k) din[k] = up[k] * inv;
    }
  }
  return dx;
}

template <typename T>
LayerIO<T, GainCache<T>> gain_forward(const Tensor<T>& x, const Tensor<T>& gain) {
  require_shape(gain.shape(), {1}, "gain parameter");
  Tensor<T> y = x;
  const T g = gain[0];
  for (auto& v : y.values()) v *= g;
  return {std::move(y), GainCache<T>{x, g}};
}

template <typename T>
GainGrads<T> gain_backward(const GainCache<T>& cache, const Tensor<T>& dy) {
  require_shape(dy.shape(), cache.x.shape(), "gain upstream gradient");
  GainGrads<T> g{dy, Tensor<T>({1})};
  T acc = T(0);
  for (std::size_t i = 0; i < dy.size(); ++i) {
    g.dx[i] *= cache.gain;
    acc += cache.x[i] * dy[i];
  }
  g.dgain[0] = acc;
  return g;
}

template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  std::vector<T> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const T peak = *std::max_element(p.begin(), p.end());
  T total = T(0);
  for (auto& v : p) {
    v = std::exp(v - peak);
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t label) {
  if (label >= logits.size()) {
    throw Error(ErrorCode::BadLabel,
                "label " + std::to_string(label) + " for " + std::to_string(logits.size()) + " classes");
  }
  const T peak = *std::max_element(logits.data().begin(), logits.data().end());
  T total = T(0);
  for (const T v : logits.data()) total += std::exp(v - peak);
  const T log_norm = peak + std::log(total);
  LossResult<T> r{log_norm - logits[label], Tensor<T>(logits.shape())};
  for (std::size_t k = 0; k < logits.size(); ++k) r.dlogits[k] = std::exp(logits[k] - log_norm);
  r.dlogits[label] -= T(1);
  return r;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::BadConfig, "learning_rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw Error(ErrorCode::BadConfig, "momentum must lie in [0, 1)");
  if (batch_size < 1) throw Error(ErrorCode::BadConfig, "batch_size must be >= 1");
}

template <typename T>
void sgd_step(std::span<T> params, std::span<const T> grads, std::span<T> velocity, const TrainConfig& config) {
  if (grads.size() != params.size() || velocity.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "sgd_step: params " + std::to_string(params.size()) + ", grads " +
                                              std::to_string(grads.size()) + ", velocity " +
                                              std::to_string(velocity.size()));
  }
  const T mu = static_cast<T>(config.momentum);
  const T lr = static_cast<T>(config.learning_rate);
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = mu * velocity[i] - lr * grads[i];
    params[i] += velocity[i];
  }
}

GradCheckReport gradient_check(const std::function<double(std::span<const double>)>& loss,
                               std::span<const double> point, std::span<const double> analytic, double epsilon) {
  if (point.size() != analytic.size()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient_check: point and analytic gradient lengths differ");
  }
  std::vector<double> probe(point.begin(), point.end());
  GradCheckReport report;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + epsilon;
    const double up = loss(probe);
    probe[i] = saved - epsilon;
    const double down = loss(probe);
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    const double err = std::abs(analytic[i] - numeric) / denom;
    if (err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_index = i;
    }
  }
  return report;
}

#define PEATWHT_INSTANTIATE_NN(T)                                                                            \
  template LayerIO<T, Conv3x3Cache<T>> conv3x3_forward(const Tensor<T>&, const Tensor<T>&, std::size_t);  \
  template Conv3x3Grads<T> conv3x3_backward(const Conv3x3Cache<T>&, const Tensor<T>&);                    \
  template LayerIO<T, PointwiseCache<T>> pointwise_forward(const Tensor<T>&, const Tensor<T>&);           \
  template PointwiseGrads<T> pointwise_backward(const PointwiseCache<T>&, const Tensor<T>&);              \
  template LayerIO<T, DenseCache<T>> dense_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template DenseGrads<T> dense_backward(const DenseCache<T>&, const Tensor<T>&);                          \
  template LayerIO<T, ReluCache<T>> relu_forward(const Tensor<T>&);                                       \
  template Tensor<T> relu_backward(const ReluCache<T>&, const Tensor<T>&);                                \
  template LayerIO<T, ShapeCache> gap_forward(const Tensor<T>&);                                          \
  template Tensor<T> gap_backward(const ShapeCache&, const Tensor<T>&);                                   \
  template LayerIO<T, ShapeCache> avgpool_forward(const Tensor<T>&, std::size_t);                         \
  template Tensor<T> avgpool_backward(const ShapeCache&, const Tensor<T>&, std::size_t);                  \
  template LayerIO<T, GainCache<T>> gain_forward(const Tensor<T>&, const Tensor<T>&);                     \
  template GainGrads<T> gain_backward(const GainCache<T>&, const Tensor<T>&);                             \
  template std::vector<T> softmax(std::span<const T>);                                                    \
  template LossResult<T> softmax_cross_entropy(const Tensor<T>&, std::size_t);                            \
  template void sgd_step(std::span<T>, std::span<const T>, std::span<T>, const TrainConfig&);

PEATWHT_INSTANTIATE_NN(float)
PEATWHT_INSTANTIATE_NN(double)

#undef PEATWHT_INSTANTIATE_NN

}  // namespace peatwht
