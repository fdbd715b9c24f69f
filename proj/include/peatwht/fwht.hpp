#pragma once

// Walsh-Hadamard transform in natural (Sylvester) order.
//
// The default convention is unnormalized: the forward transform applies the
// +/-1 Hadamard matrix H_N directly and the inverse divides by N afterwards.
// The normalized variant scales by N^{-1/2} so that H H^T = I.

#include <bit>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "peatwht/error.hpp"

namespace peatwht {

inline constexpr int kMaxMatrixOrder = 12;

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

/// Exponent m with 2^m == n. Throws LengthNotPowerOfTwo otherwise.
int log2_exact(std::size_t n);

/// Non-owning view over every `stride`-th element, starting at `data`.
template <typename T>
class StridedView {
 public:
  StridedView(T* data, std::size_t size, std::size_t stride = 1) noexcept
      : data_(data), size_(size), stride_(stride) {}
  StridedView(std::span<T> s) noexcept : StridedView(s.data(), s.size(), 1) {}  // NOLINT

  T& operator[](std::size_t i) const noexcept { return data_[i * stride_]; }
  std::size_t size() const noexcept { return size_; }
  std::size_t stride() const noexcept { return stride_; }
  T* data() const noexcept { return data_; }

 private:
  T* data_;
  std::size_t size_;
  std::size_t stride_;
};

namespace detail {

// X is either a raw pointer or a StridedView; both index with [].
template <typename X>
inline void butterfly_stage(X x, std::size_t begin, std::size_t end, std::size_t half) {
  for (std::size_t i = begin; i < end; i += 2 * half) {
    for (std::size_t j = i; j < i + half; ++j) {
      const auto a = x[j];
      const auto b = x[j + half];
      x[j] = a + b;
      x[j + half] = a - b;
    }
  }
}

// Stages `half` and `2 * half` fused into one sweep; same sums as two
// butterfly_stage calls.
template <typename X>
inline void butterfly_stage_pair(X x, std::size_t n, std::size_t half) {
  for (std::size_t i = 0; i < n; i += 4 * half) {
    for (std::size_t j = i; j < i + half; ++j) {
      const auto a = x[j], b = x[j + half], c = x[j + 2 * half], d = x[j + 3 * half];
      const auto s0 = a + b, s1 = a - b, s2 = c + d, s3 = c - d;
      x[j] = s0 + s2;
      x[j + half] = s1 + s3;
      x[j + 2 * half] = s0 - s2;
      x[j + 3 * half] = s1 - s3;
    }
  }
}

// Stages `half`, `2 * half` and `4 * half` fused into one sweep.
template <typename X>
inline void butterfly_stage_triple(X x, std::size_t n, std::size_t half) {
  for (std::size_t i = 0; i < n; i += 8 * half) {
    for (std::size_t j = i; j < i + half; ++j) {
      const auto a0 = x[j], a1 = x[j + half], a2 = x[j + 2 * half], a3 = x[j + 3 * half];
      const auto a4 = x[j + 4 * half], a5 = x[j + 5 * half], a6 = x[j + 6 * half], a7 = x[j + 7 * half];
      const auto b0 = a0 + a1, b1 = a0 - a1, b2 = a2 + a3, b3 = a2 - a3;
      const auto b4 = a4 + a5, b5 = a4 - a5, b6 = a6 + a7, b7 = a6 - a7;
      const auto c0 = b0 + b2, c1 = b1 + b3, c2 = b0 - b2, c3 = b1 - b3;
      const auto c4 = b4 + b6, c5 = b5 + b7, c6 = b4 - b6, c7 = b5 - b7;
      x[j] = c0 + c4;
      x[j + half] = c1 + c5;
      x[j + 2 * half] = c2 + c6;
      x[j + 3 * half] = c3 + c7;
      x[j + 4 * half] = c0 - c4;
      x[j + 5 * half] = c1 - c5;
      x[j + 6 * half] = c2 - c6;
      x[j + 7 * half] = c3 - c7;
    }
  }
}

// Stages with a span below this stay inside one block before moving on.
inline constexpr std::size_t kFwhtBlock = std::size_t{1} << 11;

template <typename X>
void fwht_run(X x, std::size_t n) {
  const std::size_t block = n < kFwhtBlock ? n : kFwhtBlock;
  for (std::size_t base = 0; base < n; base += block) {
    for (std::size_t half = 1; half < block; half *= 2) butterfly_stage(x, base, base + block, half);
  }
  std::size_t half = block;
  for (; 8 * half <= n; half *= 8) butterfly_stage_triple(x, n, half);
  if (4 * half <= n) {
    butterfly_stage_pair(x, n, half);
  } else if (2 * half <= n) {
    butterfly_stage(x, 0, n, half);
  }
}

}  // namespace detail

/// In-place unnormalized transform: x <- H_N x. Only additions and
/// subtractions are performed.
template <typename T>
void fwht_inplace(StridedView<T> x) {
  const std::size_t n = x.size();
  if (!is_power_of_two(n)) {
    throw Error(ErrorCode::LengthNotPowerOfTwo, "fwht length " + std::to_string(n));
  }
  if (x.stride() == 1) {
    detail::fwht_run(x.data(), n);
  } else {
    detail::fwht_run(x, n);
  }
}

template <typename T>
void fwht_inplace(std::span<T> x) {
  fwht_inplace(StridedView<T>(x));
}

/// In-place inverse of the unnormalized transform: x <- H_N x / N.
template <typename T>
void ifwht_inplace(StridedView<T> x) {
  fwht_inplace(x);
  const T inv_n = T(1) / static_cast<T>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= inv_n;
}

template <typename T>
void ifwht_inplace(std::span<T> x) {
  ifwht_inplace(StridedView<T>(x));
}

/// In-place orthonormal transform: x <- N^{-1/2} H_N x. Self-inverse.
template <typename T>
void fwht_normalized_inplace(StridedView<T> x) {
  fwht_inplace(x);
  const T s = T(1) / std::sqrt(static_cast<T>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= s;
}

struct HadamardMatrix {
  int order = 0;  // m; the matrix is 2^m x 2^m
  bool normalized = false;
  std::vector<double> entries;  // row-major

  std::size_t size() const noexcept { return std::size_t{1} << order; }
  double operator()(std::size_t row, std::size_t col) const { return entries[row * size() + col]; }
};

/// Builds H_m by the Sylvester recursion H_m = [[H, H], [H, -H]] (times
/// 2^{-1/2} per level when normalized). Rejects m > 12.
HadamardMatrix hadamard_matrix(int order, bool normalized = false);

/// Coefficients in natural order, plus which convention produced them.
struct Spectrum {
  std::vector<double> coefficients;
  bool normalized = false;
};

Spectrum fwht(std::span<const double> x, bool normalized = false);

/// Inverse of fwht() under whichever convention `y` carries.
std::vector<double> ifwht(const Spectrum& y);

/// Test oracle: y[k] = sum_i x[i] h[k xor i], O(N^2).
std::vector<double> dyadic_convolve_bruteforce(std::span<const double> x, std::span<const double> h);

/// Direct O(N^2) product H_N x using H[i][j] = (-1)^{popcount(i & j)}.
/// No matrix is materialized; used as the reference in benchmarks and tests.
std::vector<double> naive_hadamard_apply(std::span<const double> x);

}  // namespace peatwht
