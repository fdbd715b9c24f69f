#pragma once

// Binary PPM (P6, maxval 255) codec.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "peatwht/tensor.hpp"

namespace peatwht {

/// 8-bit interleaved RGB, row-major.
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  RgbImage() = default;
  RgbImage(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), pixels(h * w * 3, fill) {}

  std::uint8_t* at(std::size_t y, std::size_t x) noexcept { return pixels.data() + (y * width + x) * 3; }
  const std::uint8_t* at(std::size_t y, std::size_t x) const noexcept { return pixels.data() + (y * width + x) * 3; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Parses a P6 stream. Header comments are accepted; data after the raster
/// is ignored. Throws BadMagic, BadHeader, UnsupportedMaxval, TruncatedFile.
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);

/// Canonical encoding: "P6\n<width> <height>\n255\n" followed by the raster.
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);

RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const RgbImage& image, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Pixels as H x W x 3 values in [0, 1] (byte / 255).
template <typename T>
Tensor<T> to_tensor(const RgbImage& image);

/// Inverse of to_tensor: round(v * 255) after clamping to [0, 1].
template <typename T>
RgbImage from_tensor(const Tensor<T>& tensor);

inline Tensor<float> ppm_read(const std::filesystem::path& path) { return to_tensor<float>(read_ppm(path)); }
inline void ppm_write(const Tensor<float>& image, const std::filesystem::path& path) {
  write_ppm(from_tensor(image), path);
}

}  // namespace peatwht
