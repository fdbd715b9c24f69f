#pragma once

// Symbolic architecture descriptors and parameter counting.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace peatwht {

enum class LayerKind { Conv, Pointwise, Dense, Wht, Relu, Gap, AddSkip, AvgPool, MaxPool, BatchNorm, Gain };

std::string_view to_string(LayerKind kind);

struct LayerDescriptor {
  LayerKind kind = LayerKind::Relu;
  std::string name;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;  // Conv / pooling window
  std::size_t stride = 1;
  std::size_t height = 0;  // output spatial extent, 0 when not tracked
  std::size_t width = 0;
  bool bias = false;
  bool threshold_trainable = false;  // Wht
  // AddSkip: index of the layer whose output is added back (-1 = the
  // network input). A projection shortcut adds a 1x1 conv and, when
  // `projection_norm` is set, a batch-norm affine pair.
  int skip_from = -1;
  bool projection = false;
  bool projection_norm = false;
};

struct ArchDescriptor {
  std::string name;
  std::size_t input_channels = 3;
  std::size_t input_size = 0;  // square input extent, 0 when not tracked
  std::vector<LayerDescriptor> layers;
  std::size_t num_classes = 2;
  std::vector<std::string> assumptions;
};

/// Parameters of one layer: conv k*k*Cin*Cout (+Cout bias), pointwise
/// Cin*Cout (+bias), dense In*Out (+bias), wht N (+1 if the threshold is
/// trainable), batch norm 2*C, gain 1, everything else 0.
std::size_t layer_params(const LayerDescriptor& layer);

/// Checks channel wiring end to end. Throws InvalidDescriptor.
void validate(const ArchDescriptor& arch);

/// Sum of layer_params after validate().
std::size_t count_params(const ArchDescriptor& arch);

/// ResNet-50 counting descriptor: 7x7 stem, bottleneck stages [3, 4, 6, 3],
/// bias-free convs each followed by a batch-norm affine pair, projection
/// shortcuts at every stage entry, 2048 -> classes dense head with bias.
ArchDescriptor resnet50_descriptor(std::size_t num_classes);

/// ResNet-50 with the bottleneck 3x3 convs of the listed stages (1-based)
/// replaced by WHT layers of equal width. Strided 3x3 convs become a WHT
/// layer followed by parameter-free average pooling.
ArchDescriptor wht_resnet50_descriptor(std::size_t num_classes, const std::vector<int>& stages);

enum class ToyVariant { ConvBaseline, Wht };

std::string_view to_string(ToyVariant variant);
std::optional<ToyVariant> parse_toy_variant(std::string_view text);

/// stem pointwise 3->W, then three residual blocks
/// [pointwise -> relu -> (conv3x3 | wht) -> gain -> add-skip] separated by
/// 2x average pooling, global average pooling, dense head -> 2 logits.
/// Throws BadWidth unless width is a power of two >= 8 and input_size is
/// one of 32, 64, 224.
ArchDescriptor toy_descriptor(ToyVariant variant, std::size_t width, std::size_t input_size);

/// Named architectures accepted by the `params` command: resnet50,
/// wht-resnet50-preset, wht-resnet50-all, toy-conv, toy-wht.
ArchDescriptor named_descriptor(std::string_view name, std::size_t num_classes, std::size_t width,
                                std::size_t input_size = 32);

/// Aligned per-layer table followed by the total and the assumption list.
std::string format_param_table(const ArchDescriptor& arch);

}  // namespace peatwht
