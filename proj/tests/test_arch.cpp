#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "expect_error.hpp"
#include "peatwht/arch.hpp"
#include "peatwht/network.hpp"
#include "support.hpp"

using namespace peatwht;
using testing_support::random_tensor;

namespace {

std::size_t tensor_total(const Network<double>& net) {
  std::size_t total = 0;
  for (const auto& [name, t] : net.parameters()) total += t.size();
  return total;
}

}  // namespace

TEST(LayerParams, ConvWithoutBias) {
  LayerDescriptor l{.kind = LayerKind::Conv, .in_channels = 3, .out_channels = 8, .kernel = 3};
  EXPECT_EQ(layer_params(l), 216u);
  l.bias = true;
  EXPECT_EQ(layer_params(l), 224u);
}

TEST(LayerParams, WhtCountsScalesOnly) {
  LayerDescriptor l{.kind = LayerKind::Wht, .in_channels = 64, .out_channels = 64};
  EXPECT_EQ(layer_params(l), 64u);
  l.threshold_trainable = true;
  EXPECT_EQ(layer_params(l), 65u);
}

TEST(LayerParams, OtherKinds) {
  EXPECT_EQ(layer_params({.kind = LayerKind::Pointwise, .in_channels = 4, .out_channels = 6}), 24u);
  EXPECT_EQ(layer_params({.kind = LayerKind::Dense, .in_channels = 4, .out_channels = 2, .bias = true}), 10u);
  EXPECT_EQ(layer_params({.kind = LayerKind::BatchNorm, .in_channels = 5, .out_channels = 5}), 10u);
  EXPECT_EQ(layer_params({.kind = LayerKind::Gain, .in_channels = 5, .out_channels = 5}), 1u);
  EXPECT_EQ(layer_params({.kind = LayerKind::Relu, .in_channels = 5, .out_channels = 5}), 0u);
}

TEST(Resnet50, CountNearReference) {
  const double reference = 23512146.0;
  const auto count = static_cast<double>(count_params(resnet50_descriptor(2)));
  EXPECT_LE(std::abs(count - reference) / reference, 0.002);
  EXPECT_FALSE(resnet50_descriptor(2).assumptions.empty());
}

TEST(Resnet50, HeadSlopePerClass) {
  const std::size_t base = count_params(resnet50_descriptor(2));
  for (std::size_t k = 3; k <= 10; ++k) EXPECT_EQ(count_params(resnet50_descriptor(k)), base + (k - 2) * 2049);
}

TEST(Resnet50, WhtPresetsAreSmaller) {
  const std::size_t conv = count_params(resnet50_descriptor(2));
  std::size_t previous = conv;
  for (const std::vector<int>& stages : {std::vector<int>{4}, {3, 4}, {2, 3, 4}, {1, 2, 3, 4}}) {
    const std::size_t c = count_params(wht_resnet50_descriptor(2, stages));
    EXPECT_LT(c, previous);
    previous = c;
  }
  EXPECT_LT(count_params(named_descriptor("wht-resnet50-preset", 2, 8)), conv);
  EXPECT_LT(count_params(named_descriptor("wht-resnet50-all", 2, 8)), conv);
}

TEST(Resnet50, ReplacingOneConvSavesExactly) {
  // One 3x3 conv of width N becomes N scales.
  const auto conv = resnet50_descriptor(2);
  const auto wht = wht_resnet50_descriptor(2, {4});
  std::size_t expected = 0;
  for (const auto& l : conv.layers)
    if (l.kind == LayerKind::Conv && l.name.starts_with("layer4")) expected += 9 * l.in_channels * l.out_channels - l.in_channels;
  EXPECT_EQ(count_params(conv) - count_params(wht), expected);
}

TEST(Validate, RejectsBrokenWiring) {
  auto arch = toy_descriptor(ToyVariant::Wht, 8, 32);
  arch.layers[1].in_channels = 4;
  expect_code(ErrorCode::InvalidDescriptor, [&] { validate(arch); });

  auto headless = toy_descriptor(ToyVariant::Wht, 8, 32);
  headless.layers.pop_back();
  expect_code(ErrorCode::InvalidDescriptor, [&] { count_params(headless); });

  ArchDescriptor bad_wht{.name = "w", .input_channels = 6};
  bad_wht.layers.push_back({.kind = LayerKind::Wht, .name = "w", .in_channels = 6, .out_channels = 6});
  expect_code(ErrorCode::InvalidDescriptor, [&] { validate(bad_wht); });

  expect_code(ErrorCode::InvalidDescriptor, [] { validate(ArchDescriptor{}); });
  expect_code(ErrorCode::InvalidDescriptor, [] { wht_resnet50_descriptor(2, {5}); });
  expect_code(ErrorCode::InvalidDescriptor, [] { named_descriptor("vgg", 2, 8); });
}

TEST(ToyNet, WhtVariantIsSmaller) {
  for (std::size_t w = 8; w <= 64; w *= 2) {
    EXPECT_LT(count_params(toy_descriptor(ToyVariant::Wht, w, 32)),
              count_params(toy_descriptor(ToyVariant::ConvBaseline, w, 32)));
  }
}

TEST(ToyNet, InstantiatedCountMatchesDescriptor) {
  for (const auto v : {ToyVariant::Wht, ToyVariant::ConvBaseline})
    for (std::size_t w : {8u, 16u}) {
      const auto net = build_toy_net<double>(v, w, 32, 3);
      EXPECT_EQ(tensor_total(net), count_params(net.descriptor()));
      EXPECT_EQ(net.parameter_count(), count_params(net.descriptor()));
    }
}

TEST(ToyNet, VariantsDifferOnlyInBracketedLayer) {
  const auto a = toy_descriptor(ToyVariant::Wht, 8, 32), b = toy_descriptor(ToyVariant::ConvBaseline, 8, 32);
  ASSERT_EQ(a.layers.size(), b.layers.size());
  std::size_t differing = 0;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].kind != b.layers[i].kind) {
      EXPECT_EQ(a.layers[i].kind, LayerKind::Wht);
      EXPECT_EQ(b.layers[i].kind, LayerKind::Conv);
      ++differing;
    }
  }
  EXPECT_EQ(differing, 3u);
}

TEST(ToyNet, MapsInputToTwoLogits) {
  Rng rng(11);
  for (const auto v : {ToyVariant::Wht, ToyVariant::ConvBaseline}) {
    const auto net = build_toy_net<double>(v, 8, 32, 1);
    const auto logits = net.logits(random_tensor(rng, {32, 32, 3}, 0.0, 1.0));
    EXPECT_EQ(logits.shape(), (Shape{2}));
  }
}

TEST(ToyNet, SeedDeterminism) {
  const auto a = build_toy_net<double>(ToyVariant::ConvBaseline, 8, 32, 42);
  const auto b = build_toy_net<double>(ToyVariant::ConvBaseline, 8, 32, 42);
  const auto c = build_toy_net<double>(ToyVariant::ConvBaseline, 8, 32, 43);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_NE(a.parameters(), c.parameters());
}

TEST(ToyNet, BadWidthAndSize) {
  expect_code(ErrorCode::BadWidth, [] { toy_descriptor(ToyVariant::Wht, 4, 32); });
  expect_code(ErrorCode::BadWidth, [] { toy_descriptor(ToyVariant::Wht, 12, 32); });
  expect_code(ErrorCode::BadWidth, [] { toy_descriptor(ToyVariant::Wht, 8, 48); });
  EXPECT_NO_THROW(toy_descriptor(ToyVariant::Wht, 8, 224));
}

TEST(ToyNet, ParseVariant) {
  EXPECT_EQ(parse_toy_variant("toy-wht"), ToyVariant::Wht);
  EXPECT_EQ(parse_toy_variant("conv-baseline"), ToyVariant::ConvBaseline);
  EXPECT_FALSE(parse_toy_variant("resnet").has_value());
}

TEST(ForwardClassify, ProbabilitiesSumToOne) {
  Rng rng(12);
  const auto net = build_toy_net<double>(ToyVariant::Wht, 8, 32, 5);
  const auto patch = random_tensor(rng, {32, 32, 3}, 0.0, 1.0);
  const auto p = forward_classify(net, patch);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
  EXPECT_GE(p[kFireClass], 0.0);
  EXPECT_EQ(forward_classify(net, patch), p);
  expect_code(ErrorCode::ShapeMismatch, [&] { forward_classify(net, Tensor<double>({16, 16, 3})); });
}

TEST(ForwardClassify, IdentityWhtEqualsRemovingIt) {
  Rng rng(13);
  const auto net = build_toy_net<double>(ToyVariant::Wht, 8, 32, 9);
  auto stripped_arch = net.descriptor();
  std::erase_if(stripped_arch.layers, [](const LayerDescriptor& l) { return l.kind == LayerKind::Wht; });
  // Skip indices shift down by the number of removed layers before them.
  for (auto& l : stripped_arch.layers) {
    if (l.kind != LayerKind::AddSkip || l.skip_from < 0) continue;
    int removed = 0;
    for (int i = 0; i < l.skip_from; ++i) removed += net.descriptor().layers[static_cast<std::size_t>(i)].kind == LayerKind::Wht;
    l.skip_from -= removed;
  }
  Network<double> stripped(stripped_arch, 9);
  for (auto& [name, t] : stripped.parameters()) t = net.parameters().at(name);

  const auto patch = random_tensor(rng, {32, 32, 3}, 0.0, 1.0);
  const auto a = net.logits(patch), b = stripped.logits(patch);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(ParamTable, ListsEveryLayerAndTotal) {
  const auto arch = toy_descriptor(ToyVariant::Wht, 8, 32);
  const auto table = format_param_table(arch);
  for (const auto& l : arch.layers) EXPECT_NE(table.find(l.name), std::string::npos) << l.name;
  EXPECT_NE(table.find(std::to_string(count_params(arch))), std::string::npos);
  EXPECT_NE(table.find("assumptions"), std::string::npos);
}
