#pragma once

// Helpers shared by the unit tests and the acceptance runner: seeded random
// tensors, reference implementations written without the library kernels,
// and finite-difference probes.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "peatwht/network.hpp"
#include "peatwht/nn.hpp"
#include "peatwht/rng.hpp"
#include "peatwht/tensor.hpp"

namespace testing_support {

using peatwht::Rng;
using peatwht::Shape;
using peatwht::Tensor;

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline Tensor<double> random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& x : t.values()) x = rng.uniform(lo, hi);
  return t;
}

// Sylvester Hadamard entry: (-1)^popcount(i & j).
inline double hadamard_entry(std::size_t i, std::size_t j) { return std::popcount(i & j) % 2 ? -1.0 : 1.0; }

inline std::vector<double> hadamard_multiply(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i] += hadamard_entry(i, j) * x[j];
  return y;
}

inline std::vector<double> xor_convolve(std::span<const double> x, std::span<const double> h) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t k = 0; k < x.size(); ++k)
    for (std::size_t i = 0; i < x.size(); ++i) y[k] += x[i] * h[k ^ i];
  return y;
}

// Direct-loop 3x3 cross-correlation with zero padding 1.
inline Tensor<double> conv3x3_reference(const Tensor<double>& x, const Tensor<double>& w, std::size_t stride = 1) {
  const std::size_t h = x.dim(0), wd = x.dim(1), cin = x.dim(2), cout = w.dim(3);
  const std::size_t oh = (h - 1) / stride + 1, ow = (wd - 1) / stride + 1;
  Tensor<double> y({oh, ow, cout});
  for (std::size_t oy = 0; oy < oh; ++oy)
    for (std::size_t ox = 0; ox < ow; ++ox)
      for (std::size_t co = 0; co < cout; ++co) {
        double acc = 0.0;
        for (std::size_t ky = 0; ky < 3; ++ky)
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const long iy = static_cast<long>(oy * stride + ky) - 1;
            const long ix = static_cast<long>(ox * stride + kx) - 1;
            if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              acc += x[(static_cast<std::size_t>(iy) * wd + static_cast<std::size_t>(ix)) * cin + ci] *
                     w[((ky * 3 + kx) * cin + ci) * cout + co];
            }
          }
        y[(oy * ow + ox) * cout + co] = acc;
      }
  return y;
}

// Scalar probe L = sum(weights * y) used to turn a layer into a loss.
inline double probe(const Tensor<double>& y, const Tensor<double>& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * weights[i];
  return s;
}

// Gradient check of f with respect to `t`, perturbing a copy in place.
inline double check_wrt(Tensor<double> t, const std::function<double(const Tensor<double>&)>& f,
                        std::span<const double> analytic, double eps = 1e-5) {
  const std::vector<double> point = t.values();
  auto loss = [&](std::span<const double> p) {
    std::copy(p.begin(), p.end(), t.values().begin());
    return f(t);
  };
  return peatwht::gradient_check(loss, point, analytic, eps).max_rel_error;
}

// Worst relative error over every parameter tensor of a network
// with loss cross_entropy(logits, label).
inline double network_gradient_error(const peatwht::Network<double>& net, const Tensor<double>& x, std::size_t label) {
  const auto trace = net.forward(x);
  const auto loss = peatwht::softmax_cross_entropy(trace.logits(), label);
  const auto grads = net.backward(trace, loss.dlogits);
  double worst = 0.0;
  for (const auto& [name, g] : grads) {
    auto perturbed = net;
    auto& target = perturbed.parameters().at(name);
    auto f = [&](const Tensor<double>& value) {
      target = value;
      return peatwht::softmax_cross_entropy(perturbed.logits(x), label).loss;
    };
    worst = std::max(worst, check_wrt(net.parameters().at(name), f, g.data()));
  }
  return worst;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testing_support
