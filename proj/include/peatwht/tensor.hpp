#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "peatwht/error.hpp"

namespace peatwht {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape);

/// Dense row-major array. Feature maps are laid out H x W x C.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_volume(shape_)) {
      throw Error(ErrorCode::ShapeMismatch,
                  "data length " + std::to_string(data_.size()) + " for shape " + shape_to_string(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // H x W x C accessors.
  T& at(std::size_t h, std::size_t w, std::size_t c) noexcept {
    return data_[(h * shape_[1] + w) * shape_[2] + c];
  }
  const T& at(std::size_t h, std::size_t w, std::size_t c) const noexcept {
    return data_[(h * shape_[1] + w) * shape_[2] + c];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

inline void require_shape(const Shape& actual, const Shape& expected, const char* what) {
  if (actual != expected) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": got " + shape_to_string(actual) + ", expected " + shape_to_string(expected));
  }
}

}  // namespace peatwht
