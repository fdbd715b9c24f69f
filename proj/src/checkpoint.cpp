#include "peatwht/checkpoint.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>

#include "peatwht/image.hpp"

namespace peatwht {

namespace {

constexpr char kMagic[4] = {'W', 'H', 'T', 'C'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::TruncatedFile, std::string("checkpoint ends inside ") + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const std::string& Checkpoint::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw Error(ErrorCode::ArchMismatch, "checkpoint has no '" + key + "' metadata");
  return it->second;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(ckpt.version);
  w.u32(static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (const auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (const float v : t.data()) w.f32(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::TruncatedFile, "checkpoint shorter than its magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(ErrorCode::BadMagic, "not a WHTC checkpoint");
  Reader r(bytes.subspan(4));
  Checkpoint ckpt;
  ckpt.version = r.u32("version");
  if (ckpt.version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, fmt::format("checkpoint version {} (supported: {})", ckpt.version,
                                                        kCheckpointVersion));
  }
  const std::uint32_t n_meta = r.u32("metadata count");
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string key = r.str("metadata key");
    ckpt.metadata[key] = r.str("metadata value");
  }
  const std::uint32_t n_tensors = r.u32("tensor count");
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str("tensor name");
    const std::uint32_t rank = r.u32("tensor rank");
    if (rank > 8) throw Error(ErrorCode::TensorShapeMismatch, fmt::format("tensor {} has rank {}", name, rank));
    Shape shape(rank);
    for (auto& d : shape) d = r.u32("tensor dims");
    const std::size_t volume = shape_volume(shape);
    r.need(volume * 4, "tensor values");
    std::vector<float> values(volume);
    for (auto& v : values) v = r.f32("tensor values");
    ckpt.tensors.emplace(std::move(name), Tensor<float>(std::move(shape), std::move(values)));
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

namespace {

template <typename T>
std::map<std::string, std::string> arch_metadata(const Network<T>& net) {
  const ArchDescriptor& d = net.descriptor();
  return {{"arch", d.name},
          {"width", std::to_string(d.layers.front().out_channels)},
          {"input_size", std::to_string(d.input_size)},
          {"seed", std::to_string(net.seed())}};
}

}  // namespace

template <typename T>
Checkpoint make_checkpoint(const Network<T>& net, std::map<std::string, std::string> extra) {
  Checkpoint ckpt;
  ckpt.metadata = std::move(extra);
  for (auto& [k, v] : arch_metadata(net)) ckpt.metadata.insert_or_assign(k, v);
  for (const auto& [name, t] : net.parameters()) ckpt.tensors.emplace(name, t.template cast<float>());
  for (const auto& [name, t] : net.buffers()) ckpt.tensors.emplace(name, t.template cast<float>());
  return ckpt;
}

template <typename T>
void load_weights(Network<T>& net, const Checkpoint& ckpt) {
  for (const auto& key : {"arch", "width", "input_size"}) {
    const std::string expected = arch_metadata(net).at(key);
    const std::string& actual = ckpt.meta(key);
    if (actual != expected) {
      throw Error(ErrorCode::ArchMismatch, fmt::format("checkpoint {} is '{}', network expects '{}'", key, actual, expected));
    }
  }
  auto copy_into = [&](TensorMap<T>& targets) {
    for (auto& [name, t] : targets) {
      auto it = ckpt.tensors.find(name);
      if (it == ckpt.tensors.end()) throw Error(ErrorCode::TensorShapeMismatch, "checkpoint lacks tensor " + name);
      if (it->second.shape() != t.shape()) {
        throw Error(ErrorCode::TensorShapeMismatch, fmt::format("tensor {} is {} in the checkpoint, {} in the network",
                                                                name, shape_to_string(it->second.shape()),
                                                                shape_to_string(t.shape())));
      }
      t = it->second.template cast<T>();
    }
  };
  copy_into(net.parameters());
  copy_into(net.buffers());
  const std::size_t expected = net.parameters().size() + net.buffers().size();
  if (ckpt.tensors.size() != expected) {
    throw Error(ErrorCode::TensorShapeMismatch,
                fmt::format("checkpoint holds {} tensors, network has {}", ckpt.tensors.size(), expected));
  }
}

template <typename T>
Network<T> network_from_checkpoint(const Checkpoint& ckpt) {
  const auto variant = parse_toy_variant(ckpt.meta("arch"));
  if (!variant) throw Error(ErrorCode::ArchMismatch, "checkpoint architecture '" + ckpt.meta("arch") + "' is not executable");
  std::size_t width = 0, input_size = 0;
  std::uint64_t seed = 0;
  try {
    width = std::stoul(ckpt.meta("width"));
    input_size = std::stoul(ckpt.meta("input_size"));
    seed = ckpt.metadata.contains("seed") ? std::stoull(ckpt.meta("seed")) : 0;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::ArchMismatch, "malformed architecture metadata");
  }
  Network<T> net = build_toy_net<T>(*variant, width, input_size, seed);
  load_weights(net, ckpt);
  return net;
}

template Checkpoint make_checkpoint(const Network<float>&, std::map<std::string, std::string>);
template Checkpoint make_checkpoint(const Network<double>&, std::map<std::string, std::string>);
template Network<float> network_from_checkpoint(const Checkpoint&);
template Network<double> network_from_checkpoint(const Checkpoint&);
template void load_weights(Network<float>&, const Checkpoint&);
template void load_weights(Network<double>&, const Checkpoint&);

}  // namespace peatwht
