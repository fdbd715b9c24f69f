#include "peatwht/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace peatwht {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = static_cast<char>(bytes_[pos_]);
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::size_t number(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw Error(ErrorCode::TruncatedFile, std::string("header ends before ") + field);
    if (!std::isdigit(bytes_[pos_])) throw Error(ErrorCode::BadHeader, std::string("non-numeric ") + field);
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (std::size_t{1} << 24)) throw Error(ErrorCode::BadHeader, std::string(field) + " too large");
      ++pos_;
    }
    return v;
  }

  std::size_t& pos() { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) throw Error(ErrorCode::TruncatedFile, "file shorter than the magic number");
  if (bytes[0] != 'P' || bytes[1] != '6') {
    throw Error(ErrorCode::BadMagic, std::string("expected P6, found '") + static_cast<char>(bytes[0]) +
                                         static_cast<char>(bytes[1]) + "'");
  }
  HeaderReader header(bytes);
  header.pos() = 2;
  const std::size_t width = header.number("width");
  const std::size_t height = header.number("height");
  const std::size_t maxval = header.number("maxval");
  if (width == 0 || height == 0) throw Error(ErrorCode::BadHeader, "zero image extent");
  if (maxval != 255) throw Error(ErrorCode::UnsupportedMaxval, "maxval " + std::to_string(maxval));
  std::size_t& pos = header.pos();
  if (pos >= bytes.size()) throw Error(ErrorCode::TruncatedFile, "no raster after header");
  if (!std::isspace(bytes[pos])) throw Error(ErrorCode::BadHeader, "missing whitespace after maxval");
  ++pos;
  RgbImage image(height, width);
  if (bytes.size() - pos < image.pixels.size()) {
    throw Error(ErrorCode::TruncatedFile, "raster has " + std::to_string(bytes.size() - pos) + " of " +
                                              std::to_string(image.pixels.size()) + " bytes");
  }
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), image.pixels.size(), image.pixels.begin());
  return image;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  if (image.pixels.size() != image.height * image.width * 3) {
    throw Error(ErrorCode::ShapeMismatch, "pixel buffer does not match image extent");
  }
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

RgbImage read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file_bytes(path)); }

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
  write_file_bytes(path, encode_ppm(image));
}

template <typename T>
Tensor<T> to_tensor(const RgbImage& image) {
  Tensor<T> t({image.height, image.width, 3});
  for (std::size_t i = 0; i < image.pixels.size(); ++i) t[i] = static_cast<T>(image.pixels[i]) / T(255);
  return t;
}

template <typename T>
RgbImage from_tensor(const Tensor<T>& tensor) {
  if (tensor.rank() != 3 || tensor.dim(2) != 3) {
    throw Error(ErrorCode::ShapeMismatch, "expected H x W x 3 image, got " + shape_to_string(tensor.shape()));
  }
  RgbImage image(tensor.dim(0), tensor.dim(1));
  for (std::size_t i = 0; i < tensor.size(); ++i) {
    const double v = std::clamp(static_cast<double>(tensor[i]), 0.0, 1.0);
    image.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return image;
}

template Tensor<float> to_tensor(const RgbImage&);
template Tensor<double> to_tensor(const RgbImage&);
template RgbImage from_tensor(const Tensor<float>&);
template RgbImage from_tensor(const Tensor<double>&);

}  // namespace peatwht
