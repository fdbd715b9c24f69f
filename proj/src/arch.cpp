#include "peatwht/arch.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "peatwht/error.hpp"
#include "peatwht/fwht.hpp"

namespace peatwht {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Pointwise: return "pointwise";
    case LayerKind::Dense: return "dense";
    case LayerKind::Wht: return "wht";
    case LayerKind::Relu: return "relu";
    case LayerKind::Gap: return "gap";
    case LayerKind::AddSkip: return "add-skip";
    case LayerKind::AvgPool: return "avgpool";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::Gain: return "gain";
  }
  return "?";
}

std::string_view to_string(ToyVariant variant) {
  return variant == ToyVariant::Wht ? "toy-wht" : "toy-conv";
}

std::optional<ToyVariant> parse_toy_variant(std::string_view text) {
  if (text == "toy-wht" || text == "wht") return ToyVariant::Wht;
  if (text == "toy-conv" || text == "conv-baseline" || text == "conv") return ToyVariant::ConvBaseline;
  return std::nullopt;
}

std::size_t layer_params(const LayerDescriptor& l) {
  const std::size_t bias = l.bias ? l.out_channels : 0;
  switch (l.kind) {
    case LayerKind::Conv: return l.kernel * l.kernel * l.in_channels * l.out_channels + bias;
    case LayerKind::Pointwise:
    case LayerKind::Dense: return l.in_channels * l.out_channels + bias;
    case LayerKind::Wht: return l.in_channels + (l.threshold_trainable ? 1 : 0);
    case LayerKind::BatchNorm: return 2 * l.in_channels;
    case LayerKind::Gain: return 1;
    case LayerKind::AddSkip:
      return l.projection ? l.in_channels * l.out_channels + (l.projection_norm ? 2 * l.out_channels : 0) : 0;
    case LayerKind::Relu:
    case LayerKind::Gap:
    case LayerKind::AvgPool:
    case LayerKind::MaxPool: return 0;
  }
  return 0;
}

namespace {

[[noreturn]] void invalid(const ArchDescriptor& arch, std::size_t index, const std::string& why) {
  throw Error(ErrorCode::InvalidDescriptor,
              fmt::format("{} layer {} ({}): {}", arch.name, index, arch.layers[index].name, why));
}

}  // namespace

void validate(const ArchDescriptor& arch) {
  if (arch.layers.empty()) throw Error(ErrorCode::InvalidDescriptor, arch.name + ": no layers");
  std::vector<std::size_t> out_channels;
  out_channels.reserve(arch.layers.size());
  std::size_t current = arch.input_channels;
  bool flattened = false;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerDescriptor& l = arch.layers[i];
    switch (l.kind) {
      case LayerKind::AddSkip: {
        if (l.skip_from < -1 || l.skip_from >= static_cast<int>(i)) invalid(arch, i, "skip source out of range");
        const std::size_t source =
            l.skip_from < 0 ? arch.input_channels : out_channels[static_cast<std::size_t>(l.skip_from)];
        if (l.in_channels != source) invalid(arch, i, fmt::format("shortcut carries {} channels, not {}", source, l.in_channels));
        if (l.out_channels != current) invalid(arch, i, fmt::format("main path has {} channels, not {}", current, l.out_channels));
        if (!l.projection && l.in_channels != l.out_channels) invalid(arch, i, "identity shortcut changes width");
        break;
      }
      default:
        if (flattened && l.kind != LayerKind::Dense && l.kind != LayerKind::Relu) {
          invalid(arch, i, "spatial layer after global pooling");
        }
        if (l.in_channels != current) {
          invalid(arch, i, fmt::format("expects {} input channels, previous layer gives {}", l.in_channels, current));
        }
        break;
    }
    switch (l.kind) {
      case LayerKind::Conv:
      case LayerKind::Pointwise:
      case LayerKind::Dense:
        if (l.out_channels == 0) invalid(arch, i, "zero output channels");
        break;
      case LayerKind::Wht:
        if (!is_power_of_two(l.in_channels) || l.out_channels != l.in_channels) {
          invalid(arch, i, "wht layer needs equal power-of-two channel counts");
        }
        break;
      case LayerKind::Gap: flattened = true; [[fallthrough]];
      default:
        if (l.kind != LayerKind::AddSkip && l.out_channels != l.in_channels) {
          invalid(arch, i, "layer must preserve channel count");
        }
        break;
    }
    current = l.out_channels;
    out_channels.push_back(current);
  }
  if (arch.layers.back().kind != LayerKind::Dense || current != arch.num_classes) {
    throw Error(ErrorCode::InvalidDescriptor,
                fmt::format("{}: head must be dense with {} outputs", arch.name, arch.num_classes));
  }
}

std::size_t count_params(const ArchDescriptor& arch) {
  validate(arch);
  std::size_t total = 0;
  for (const auto& l : arch.layers) total += layer_params(l);
  return total;
}

namespace {

struct Builder {
  ArchDescriptor arch;
  std::size_t channels;

  explicit Builder(std::string name, std::size_t in_channels) : channels(in_channels) {
    arch.name = std::move(name);
    arch.input_channels = in_channels;
  }

  int last() const { return static_cast<int>(arch.layers.size()) - 1; }

  void push(LayerDescriptor l) {
    channels = l.out_channels;
    arch.layers.push_back(std::move(l));
  }

  void conv(const std::string& name, std::size_t out, std::size_t kernel, std::size_t stride = 1) {
    push({.kind = LayerKind::Conv, .name = name, .in_channels = channels, .out_channels = out, .kernel = kernel,
          .stride = stride});
  }
  void pointwise(const std::string& name, std::size_t out) {
    push({.kind = LayerKind::Pointwise, .name = name, .in_channels = channels, .out_channels = out});
  }
  void unary(LayerKind kind, const std::string& name, std::size_t kernel = 1, std::size_t stride = 1) {
    push({.kind = kind, .name = name, .in_channels = channels, .out_channels = channels, .kernel = kernel,
          .stride = stride});
  }
  void add(const std::string& name, int skip_from, std::size_t skip_channels, bool projection, bool norm,
           std::size_t stride = 1) {
    push({.kind = LayerKind::AddSkip, .name = name, .in_channels = skip_channels, .out_channels = channels,
          .stride = stride, .skip_from = skip_from, .projection = projection, .projection_norm = norm});
  }
};

ArchDescriptor resnet50_impl(std::size_t num_classes, const std::vector<int>& wht_stages, std::string name) {
  if (num_classes == 0) throw Error(ErrorCode::InvalidDescriptor, "num_classes must be positive");
  Builder b(std::move(name), 3);
  b.arch.input_size = 224;
  b.conv("conv1", 64, 7, 2);
  b.unary(LayerKind::BatchNorm, "bn1");
  b.unary(LayerKind::Relu, "relu");
  b.unary(LayerKind::MaxPool, "maxpool", 3, 2);

  const std::size_t widths[4] = {64, 128, 256, 512};
  const int depths[4] = {3, 4, 6, 3};
  for (int stage = 0; stage < 4; ++stage) {
    const bool use_wht = std::find(wht_stages.begin(), wht_stages.end(), stage + 1) != wht_stages.end();
    const std::size_t planes = widths[stage];
    for (int block = 0; block < depths[stage]; ++block) {
      const std::string p = fmt::format("layer{}.{}", stage + 1, block);
      const int skip_from = b.last();
      const std::size_t skip_channels = b.channels;
      const std::size_t stride = (block == 0 && stage > 0) ? 2 : 1;
      b.pointwise(p + ".conv1", planes);
      b.unary(LayerKind::BatchNorm, p + ".bn1");
      b.unary(LayerKind::Relu, p + ".relu1");
      if (use_wht) {
        b.push({.kind = LayerKind::Wht, .name = p + ".wht2", .in_channels = planes, .out_channels = planes});
        if (stride != 1) b.unary(LayerKind::AvgPool, p + ".pool2", stride, stride);
      } else {
        b.conv(p + ".conv2", planes, 3, stride);
      }
      b.unary(LayerKind::BatchNorm, p + ".bn2");
      b.unary(LayerKind::Relu, p + ".relu2");
      b.pointwise(p + ".conv3", planes * 4);
      b.unary(LayerKind::BatchNorm, p + ".bn3");
      b.add(p + ".add", skip_from, skip_channels, block == 0, true, stride);
      b.unary(LayerKind::Relu, p + ".relu3");
    }
  }
  b.unary(LayerKind::Gap, "avgpool");
  b.push({.kind = LayerKind::Dense, .name = "fc", .in_channels = 2048, .out_channels = num_classes, .bias = true});
  b.arch.num_classes = num_classes;
  b.arch.assumptions = {
      "bottleneck blocks [1x1, 3x3, 1x1] with expansion 4, stages [3, 4, 6, 3]",
      "7x7 stride-2 stem conv, 3x3 max pool",
      "all convolutions bias-free; each followed by a batch-norm affine pair (gamma, beta = 2 per channel)",
      "batch-norm running statistics are buffers, not parameters",
      "projection shortcut (1x1 conv + batch norm) at the first block of every stage",
      fmt::format("dense head 2048 -> {} with bias", num_classes),
  };
  if (!wht_stages.empty()) {
    std::string list;
    for (int s : wht_stages) list += (list.empty() ? "" : ", ") + std::to_string(s);
    b.arch.assumptions.push_back("bottleneck 3x3 convs of stages {" + list +
                                 "} replaced by WHT layers (N scale parameters, fixed threshold)");
    b.arch.assumptions.push_back("strided 3x3 convs become WHT + parameter-free 2x2 average pooling");
  }
  return b.arch;
}

}  // namespace

ArchDescriptor resnet50_descriptor(std::size_t num_classes) { return resnet50_impl(num_classes, {}, "resnet50"); }

ArchDescriptor wht_resnet50_descriptor(std::size_t num_classes, const std::vector<int>& stages) {
  for (int s : stages) {
    if (s < 1 || s > 4) throw Error(ErrorCode::InvalidDescriptor, fmt::format("stage {} outside 1..4", s));
  }
  std::string name = "wht-resnet50";
  for (int s : stages) name += "-s" + std::to_string(s);
  return resnet50_impl(num_classes, stages, std::move(name));
}

ArchDescriptor toy_descriptor(ToyVariant variant, std::size_t width, std::size_t input_size) {
  if (width < 8 || !is_power_of_two(width)) {
    throw Error(ErrorCode::BadWidth, fmt::format("width {} is not a power of two >= 8", width));
  }
  if (input_size != 32 && input_size != 64 && input_size != 224) {
    throw Error(ErrorCode::BadWidth, fmt::format("input size {} not in {{32, 64, 224}}", input_size));
  }
  Builder b(std::string(to_string(variant)), 3);
  b.arch.input_size = input_size;
  std::size_t extent = input_size;
  auto set_extent = [&] {
    b.arch.layers.back().height = extent;
    b.arch.layers.back().width = extent;
  };
  b.pointwise("stem", width);
  set_extent();
  for (int k = 1; k <= 3; ++k) {
    const std::string p = fmt::format("block{}", k);
    const int skip_from = b.last();
    b.pointwise(p + ".pw", width);
    set_extent();
    b.unary(LayerKind::Relu, p + ".relu");
    set_extent();
    if (variant == ToyVariant::Wht) {
      b.push({.kind = LayerKind::Wht, .name = fmt::format("wht{}", k), .in_channels = width, .out_channels = width});
    } else {
      b.conv(p + ".conv", width, 3);
    }
    set_extent();
    b.unary(LayerKind::Gain, p + ".gain");
    set_extent();
    b.add(p + ".add", skip_from, width, false, false);
    set_extent();
    if (k < 3) {
      extent /= 2;
      b.unary(LayerKind::AvgPool, fmt::format("pool{}", k), 2, 2);
      set_extent();
    }
  }
  b.unary(LayerKind::Gap, "gap");
  b.push({.kind = LayerKind::Dense, .name = "head", .in_channels = width, .out_channels = 2, .bias = true});
  b.arch.num_classes = 2;
  b.arch.assumptions = {
      "bias-free pointwise/3x3 convs, no normalization layers, one learnable gain per block",
      "WHT layers along channels, threshold fixed (not counted)",
      "dense head with bias",
  };
  return b.arch;
}

ArchDescriptor named_descriptor(std::string_view name, std::size_t num_classes, std::size_t width,
                                std::size_t input_size) {
  if (name == "resnet50") return resnet50_descriptor(num_classes);
  if (name == "wht-resnet50-preset") {
    auto a = wht_resnet50_descriptor(num_classes, {3, 4});
    a.name = "wht-resnet50-preset";
    return a;
  }
  if (name == "wht-resnet50-all") {
    auto a = wht_resnet50_descriptor(num_classes, {1, 2, 3, 4});
    a.name = "wht-resnet50-all";
    return a;
  }
  if (auto v = parse_toy_variant(name)) {
    if (num_classes != 2) throw Error(ErrorCode::InvalidDescriptor, "toy networks are binary classifiers");
    return toy_descriptor(*v, width, input_size);
  }
  throw Error(ErrorCode::InvalidDescriptor, "unknown architecture '" + std::string(name) + "'");
}

std::string format_param_table(const ArchDescriptor& arch) {
  const std::size_t total = count_params(arch);
  std::size_t name_width = 5;
  for (const auto& l : arch.layers) name_width = std::max(name_width, l.name.size());
  std::string out = fmt::format("{:<{}}  {:<10} {:>6} {:>6} {:>6} {:>12}\n", "layer", name_width, "kind", "in",
                                "out", "k", "params");
  for (const auto& l : arch.layers) {
    out += fmt::format("{:<{}}  {:<10} {:>6} {:>6} {:>6} {:>12}\n", l.name, name_width, to_string(l.kind),
                       l.in_channels, l.out_channels, l.kernel, layer_params(l));
  }
  out += fmt::format("total parameters ({}, {} classes): {}\n", arch.name, arch.num_classes, total);
  out += "assumptions:\n";
  for (const auto& a : arch.assumptions) out += "  - " + a + "\n";
  return out;
}

}  // namespace peatwht
