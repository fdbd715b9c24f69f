#include "peatwht/fwht.hpp"

#include <string>

namespace peatwht {

int log2_exact(std::size_t n) {
  if (!is_power_of_two(n)) {
    throw Error(ErrorCode::LengthNotPowerOfTwo, "length " + std::to_string(n));
  }
  return std::countr_zero(n);
}

HadamardMatrix hadamard_matrix(int order, bool normalized) {
  if (order < 0 || order > kMaxMatrixOrder) {
    throw Error(ErrorCode::OrderTooLarge, "order " + std::to_string(order) + " outside [0, 12]");
  }
  HadamardMatrix h;
  h.order = order;
  h.normalized = normalized;
  h.entries = {1.0};
  const double level_scale = normalized ? 1.0 / std::sqrt(2.0) : 1.0;
  for (int level = 1; level <= order; ++level) {
    const std::size_t prev = std::size_t{1} << (level - 1);
    const std::size_t cur = prev * 2;
    std::vector<double> next(cur * cur);
    for (std::size_t r = 0; r < prev; ++r) {
      for (std::size_t c = 0; c < prev; ++c) {
        const double v = h.entries[r * prev + c] * level_scale;
        next[r * cur + c] = v;
        next[r * cur + c + prev] = v;
        next[(r + prev) * cur + c] = v;
        next[(r + prev) * cur + c + prev] = -v;
      }
    }
    h.entries = std::move(next);
  }
  return h;
}

Spectrum fwht(std::span<const double> x, bool normalized) {
  Spectrum s{std::vector<double>(x.begin(), x.end()), normalized};
  StridedView<double> view{std::span<double>(s.coefficients)};
  if (normalized) {
    fwht_normalized_inplace(view);
  } else {
    fwht_inplace(view);
  }
  return s;
}

std::vector<double> ifwht(const Spectrum& y) {
  std::vector<double> x = y.coefficients;
  StridedView<double> view{std::span<double>(x)};
  if (y.normalized) {
    fwht_normalized_inplace(view);
  } else {
    ifwht_inplace(view);
  }
  return x;
}

std::vector<double> dyadic_convolve_bruteforce(std::span<const double> x, std::span<const double> h) {
  if (x.size() != h.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(x.size()) + " vs " + std::to_string(h.size()));
  }
  if (!is_power_of_two(x.size())) {
    throw Error(ErrorCode::LengthNotPowerOfTwo, "length " + std::to_string(x.size()));
  }
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * h[k ^ i];
    y[k] = acc;
  }
  return y;
}

std::vector<double> naive_hadamard_apply(std::span<const double> x) {
  if (!is_power_of_two(x.size())) {
    throw Error(ErrorCode::LengthNotPowerOfTwo, "length " + std::to_string(x.size()));
  }
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      acc += (std::popcount(i & j) & 1) ? -x[j] : x[j];
    }
    y[i] = acc;
  }
  return y;
}

}  // namespace peatwht
