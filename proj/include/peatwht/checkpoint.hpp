#pragma once

// Binary checkpoint container, little-endian:
//   "WHTC" | version u32 | metadata count u32 | (key len u32, key, value len u32, value)*
//   | tensor count u32 | (name len u32, name, rank u32, dims u32*, values f32*)*
// Metadata and tensors are written in sorted key order, so identical
// networks always produce identical bytes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "peatwht/network.hpp"

namespace peatwht {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::map<std::string, std::string> metadata;
  std::map<std::string, Tensor<float>> tensors;

  /// Value of a metadata key, or throws ArchMismatch if absent.
  const std::string& meta(const std::string& key) const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);

/// Throws BadMagic, VersionMismatch, TruncatedFile.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Parameters and buffers stored as 32-bit values, with `arch`, `width`,
/// `input_size` and `seed` metadata added to `extra`.
template <typename T>
Checkpoint make_checkpoint(const Network<T>& net, std::map<std::string, std::string> extra = {});

/// Rebuilds the toy network named by the metadata and loads its tensors.
template <typename T>
Network<T> network_from_checkpoint(const Checkpoint& ckpt);

/// Copies tensors into an existing network. Throws ArchMismatch when the
/// architecture metadata differs and TensorShapeMismatch for missing or
/// misshapen tensors.
template <typename T>
void load_weights(Network<T>& net, const Checkpoint& ckpt);

template <typename T>
void checkpoint_save(const Network<T>& net, const std::map<std::string, std::string>& metadata,
                     const std::filesystem::path& path) {
  save_checkpoint(make_checkpoint(net, metadata), path);
}

inline Network<float> checkpoint_load(const std::filesystem::path& path) {
  return network_from_checkpoint<float>(load_checkpoint(path));
}

}  // namespace peatwht
