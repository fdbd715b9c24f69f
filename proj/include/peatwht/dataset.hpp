#pragma once

// Labelled image manifests and the seeded synthetic smoke generator.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "peatwht/image.hpp"

namespace peatwht {

inline constexpr int kLabelNoFire = 0;
inline constexpr int kLabelFire = 1;

struct ManifestEntry {
  std::string path;  // relative to Manifest::root unless absolute
  int label = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Two-column CSV `path,label`; `#` starts a comment line.
struct Manifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const ManifestEntry& e) const;
  std::size_t count(int label) const;
};

/// Throws BadManifest with the 1-based line number for malformed lines,
/// labels outside {0, 1} and duplicate paths.
Manifest parse_manifest(const std::string& text, const std::filesystem::path& root);
Manifest read_manifest(const std::filesystem::path& path);
std::string format_manifest(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t count_per_class = 100;
  std::size_t resolution = 32;
  double smoke_contrast = 0.6;  // blob amplitude in [0, 1]
  double illumination_jitter = 0.2;  // global brightness factor drawn from 1 +/- this
  double pixel_noise = 0.04;

  void validate() const;
};

struct SmokeBlob {
  double center_y = 0.0;
  double center_x = 0.0;
  double sigma = 1.0;  // Gaussian radius in pixels
  double amplitude = 0.5;
};

/// Textured peat/vegetation background with optional smoke blobs blended
/// toward light gray: pixel = (1 - a) * pixel + a * smoke with
/// a = amplitude * exp(-d^2 / (2 sigma^2)). `texture_cell` is the spacing of
/// the value-noise lattice in pixels.
RgbImage render_scene(std::uint64_t seed, std::size_t height, std::size_t width, std::span<const SmokeBlob> blobs,
                      double texture_cell, double illumination_jitter = 0.2, double pixel_noise = 0.04);

/// One training sample. Fire samples carry 1-3 blobs of amplitude
/// smoke_contrast; no-fire samples are background only.
RgbImage synth_sample(const SynthConfig& config, int label, std::size_t index);

/// Writes images/{nofire,fire}_NNNN.ppm and manifest.csv under out_dir and
/// returns the manifest (interleaved by index, no-fire first).
Manifest synth_dataset(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace peatwht
