#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "peatwht/dataset.hpp"
#include "peatwht/rng.hpp"

namespace peatwht {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

constexpr double kSmoke[3] = {0.86, 0.86, 0.84};

}  // namespace

void SynthConfig::validate() const {
  if (count_per_class < 1) throw Error(ErrorCode::BadConfig, "count_per_class must be >= 1");
  if (resolution < 8) throw Error(ErrorCode::BadConfig, "resolution must be >= 8");
  if (smoke_contrast < 0.0 || smoke_contrast > 1.0) throw Error(ErrorCode::BadConfig, "smoke_contrast outside [0, 1]");
  if (illumination_jitter < 0.0 || illumination_jitter >= 1.0) {
    throw Error(ErrorCode::BadConfig, "illumination_jitter outside [0, 1)");
  }
}

RgbImage render_scene(std::uint64_t seed, std::size_t height, std::size_t width, std::span<const SmokeBlob> blobs,
                      double texture_cell, double illumination_jitter, double pixel_noise) {
  Rng rng(seed);
  // Peat, dry grass and canopy tones.
  const double base[3] = {rng.uniform(0.25, 0.45), rng.uniform(0.30, 0.50), rng.uniform(0.15, 0.30)};
  const double illumination = 1.0 + rng.uniform(-illumination_jitter, illumination_jitter);

  const double cell = std::max(texture_cell, 1.0);
  const std::size_t gh = static_cast<std::size_t>(std::ceil(static_cast<double>(height) / cell)) + 2;
  const std::size_t gw = static_cast<std::size_t>(std::ceil(static_cast<double>(width) / cell)) + 2;
  std::vector<double> lattice(gh * gw * 3);
  for (auto& v : lattice) v = rng.uniform(-0.18, 0.18);

  RgbImage image(height, width);
  std::vector<double> px(3);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = static_cast<double>(y) / cell;
    const auto iy = static_cast<std::size_t>(fy);
    const double ty = fy - static_cast<double>(iy);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = static_cast<double>(x) / cell;
      const auto ix = static_cast<std::size_t>(fx);
      const double tx = fx - static_cast<double>(ix);
      for (std::size_t k = 0; k < 3; ++k) {
        auto l = [&](std::size_t a, std::size_t b) { return lattice[(a * gw + b) * 3 + k]; };
        const double texture = (1 - ty) * ((1 - tx) * l(iy, ix) + tx * l(iy, ix + 1)) +
                               ty * ((1 - tx) * l(iy + 1, ix) + tx * l(iy + 1, ix + 1));
        px[k] = (base[k] + texture) * illumination + rng.uniform(-pixel_noise, pixel_noise);
      }
      for (const auto& blob : blobs) {
        const double dy = static_cast<double>(y) - blob.center_y;
        const double dx = static_cast<double>(x) - blob.center_x;
        const double a = blob.amplitude * std::exp(-(dy * dy + dx * dx) / (2.0 * blob.sigma * blob.sigma));
        for (std::size_t k = 0; k < 3; ++k) px[k] = (1.0 - a) * px[k] + a * kSmoke[k];
      }
      std::uint8_t* out = image.at(y, x);
      for (std::size_t k = 0; k < 3; ++k) {
        out[k] = static_cast<std::uint8_t>(std::lround(std::clamp(px[k], 0.0, 1.0) * 255.0));
      }
    }
  }
  return image;
}

RgbImage synth_sample(const SynthConfig& config, int label, std::size_t index) {
  config.validate();
  if (label != kLabelNoFire && label != kLabelFire) throw Error(ErrorCode::BadLabel, "label must be 0 or 1");
  Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(label), index));
  const double res = static_cast<double>(config.resolution);
  std::vector<SmokeBlob> blobs;
  const std::size_t n_blobs = 1 + static_cast<std::size_t>(rng.below(3));
  for (std::size_t b = 0; b < n_blobs; ++b) {
    SmokeBlob blob{rng.uniform(0.2, 0.8) * res, rng.uniform(0.2, 0.8) * res, rng.uniform(0.14, 0.26) * res,
                   config.smoke_contrast};
    // Drawn for both classes so the background stream is identical in shape.
    if (label == kLabelFire) blobs.push_back(blob);
  }
  return render_scene(rng.next_u64(), config.resolution, config.resolution, blobs, res / 4.0,
                      config.illumination_jitter, config.pixel_noise);
}

Manifest synth_dataset(const SynthConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + (out_dir / "images").string());
  Manifest manifest{out_dir, {}};
  for (std::size_t i = 0; i < config.count_per_class; ++i) {
    for (const int label : {kLabelNoFire, kLabelFire}) {
      const std::string rel = fmt::format("images/{}_{:04d}.ppm", label == kLabelFire ? "fire" : "nofire", i);
      write_ppm(synth_sample(config, label, i), out_dir / rel);
      manifest.entries.push_back({rel, label});
    }
  }
  write_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace peatwht
