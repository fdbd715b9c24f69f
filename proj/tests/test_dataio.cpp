#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "expect_error.hpp"
#include "peatwht/checkpoint.hpp"
#include "peatwht/dataset.hpp"
#include "peatwht/image.hpp"
#include "support.hpp"

using namespace peatwht;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("peatwht_dataio_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
};

RgbImage random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img(h, w);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

double mean_value(const RgbImage& img) {
  double s = 0.0;
  for (const auto p : img.pixels) s += p;
  return s / (255.0 * static_cast<double>(img.pixels.size()));
}

}  // namespace

TEST(Ppm, SingleWhitePixel) {
  const auto img = decode_ppm(bytes_of("P6\n1 1\n255\n\xff\xff\xff"));
  EXPECT_EQ(img.height, 1u);
  EXPECT_EQ(img.width, 1u);
  const auto t = to_tensor<float>(img);
  EXPECT_EQ(t.shape(), (Shape{1, 1, 3}));
  EXPECT_EQ(t.values(), (std::vector<float>{1, 1, 1}));
}

TEST(Ppm, HeaderCommentsAndWhitespace) {
  const auto img = decode_ppm(bytes_of("P6 # comment\n2\t1 # another\n255\n\x01\x02\x03\x04\x05\x06"));
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6}));
}

TEST(Ppm, CanonicalEncoding) {
  RgbImage img(1, 2);
  img.pixels = {1, 2, 3, 4, 5, 6};
  EXPECT_EQ(encode_ppm(img), bytes_of("P6\n2 1\n255\n\x01\x02\x03\x04\x05\x06"));
}

TEST(Ppm, Errors) {
  expect_code(ErrorCode::BadMagic, [] { decode_ppm(bytes_of("P5\n1 1\n255\n\x00")); });
  expect_code(ErrorCode::BadMagic, [] { decode_ppm(bytes_of("GIF89a")); });
  expect_code(ErrorCode::TruncatedFile, [] { decode_ppm(bytes_of("P")); });
  expect_code(ErrorCode::TruncatedFile, [] { decode_ppm(bytes_of("P6\n2 2\n255\n\x01\x02\x03")); });
  expect_code(ErrorCode::TruncatedFile, [] { decode_ppm(bytes_of("P6\n2 2")); });
  expect_code(ErrorCode::UnsupportedMaxval, [] { decode_ppm(bytes_of("P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00")); });
  expect_code(ErrorCode::UnsupportedMaxval, [] { decode_ppm(bytes_of("P6\n1 1\n15\n\x00\x00\x00")); });
  expect_code(ErrorCode::BadHeader, [] { decode_ppm(bytes_of("P6\nx 1\n255\n\x00\x00\x00")); });
  expect_code(ErrorCode::BadHeader, [] { decode_ppm(bytes_of("P6\n0 1\n255\n")); });
}

TEST_F(TempDir, PpmFileRoundTripIsByteIdentical) {
  const auto img = random_image(17, 23, 31);
  const auto a = dir_ / "a.ppm", b = dir_ / "b.ppm";
  write_ppm(img, a);
  EXPECT_EQ(read_ppm(a), img);
  ppm_write(ppm_read(a), b);
  EXPECT_EQ(read_file_bytes(a), read_file_bytes(b));
  expect_code(ErrorCode::IoFailure, [&] { read_ppm(dir_ / "missing.ppm"); });
}

TEST(Ppm, TensorConversionRoundTrip) {
  const auto img = random_image(5, 7, 32);
  EXPECT_EQ(from_tensor(to_tensor<double>(img)), img);
  Tensor<double> t({1, 2, 3}, 0.0);
  t[0] = -0.5;
  t[1] = 1.5;
  t[2] = 0.5;
  const auto clamped = from_tensor(t);
  EXPECT_EQ(clamped.pixels[0], 0);
  EXPECT_EQ(clamped.pixels[1], 255);
  EXPECT_EQ(clamped.pixels[2], 128);
}

TEST(Manifest, ParsesCommentsAndBlankLines) {
  const auto m = parse_manifest("# header\n\na.ppm,0\n  b c.ppm , 1 \n", "/data");
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.entries[1], (ManifestEntry{"b c.ppm", 1}));
  EXPECT_EQ(m.count(1), 1u);
  EXPECT_EQ(m.resolve(m.entries[0]), fs::path("/data/a.ppm"));
  EXPECT_EQ(m.resolve({"/abs/x.ppm", 0}), fs::path("/abs/x.ppm"));
}

TEST(Manifest, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) {
    try {
      parse_manifest(text, ".");
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadManifest);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(line_of("a,0\nb,2\n").find("line 2"), std::string::npos);
  EXPECT_NE(line_of("# c\na,0\n\nno-comma\n").find("line 4"), std::string::npos);
  EXPECT_NE(line_of("a,0\nb,1\na,1\n").find("line 3"), std::string::npos);
  EXPECT_NE(line_of(",1\n").find("line 1"), std::string::npos);
  EXPECT_NE(line_of("a,-1\n").find("line 1"), std::string::npos);
}

TEST(Manifest, FormatRoundTrip) {
  Manifest m{".", {{"x.ppm", 0}, {"y.ppm", 1}}};
  EXPECT_EQ(parse_manifest(format_manifest(m), ".").entries, m.entries);
}

TEST(Synth, ConfigValidation) {
  SynthConfig c;
  c.count_per_class = 0;
  expect_code(ErrorCode::BadConfig, [&] { c.validate(); });
  c = {};
  c.smoke_contrast = 1.5;
  expect_code(ErrorCode::BadConfig, [&] { c.validate(); });
  expect_code(ErrorCode::BadLabel, [] { synth_sample(SynthConfig{}, 2, 0); });
}

TEST(Synth, SamplesAreDeterministic) {
  SynthConfig c;
  c.seed = 5;
  EXPECT_EQ(synth_sample(c, 1, 3), synth_sample(c, 1, 3));
  EXPECT_NE(synth_sample(c, 1, 3), synth_sample(c, 1, 4));
  auto other = c;
  other.seed = 6;
  EXPECT_NE(synth_sample(c, 0, 3), synth_sample(other, 0, 3));
  EXPECT_EQ(synth_sample(c, 0, 0).height, c.resolution);
}

TEST(Synth, ZeroContrastFireEqualsBackground) {
  SynthConfig c;
  c.smoke_contrast = 0.0;
  // Blob positions may be drawn, but zero amplitude leaves the background untouched.
  const auto fire = synth_sample(c, 1, 0);
  const auto bg = synth_sample(c, 0, 0);
  EXPECT_EQ(fire.height, bg.height);
  EXPECT_NEAR(mean_value(fire), mean_value(bg), 0.05);
}

TEST(Synth, ClassMeansDifferByLessThanContrast) {
  for (const double contrast : {0.3, 0.6, 1.0}) {
    SynthConfig c;
    c.seed = 11;
    c.smoke_contrast = contrast;
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
      m0 += mean_value(synth_sample(c, 0, i)) / 100.0;
      m1 += mean_value(synth_sample(c, 1, i)) / 100.0;
    }
    EXPECT_LT(std::abs(m1 - m0), contrast);
    EXPECT_GT(m1, m0);
  }
}

TEST(Synth, RenderSceneBlobBrightensCenter) {
  const SmokeBlob blob{16, 16, 4, 1.0};
  const auto with = render_scene(3, 32, 32, std::span(&blob, 1), 8.0, 0.0, 0.0);
  const auto without = render_scene(3, 32, 32, {}, 8.0, 0.0, 0.0);
  EXPECT_GT(with.at(16, 16)[0], without.at(16, 16)[0]);
  EXPECT_EQ(with.at(0, 0)[0], without.at(0, 0)[0]);
}

TEST_F(TempDir, SynthDatasetFilesAndManifest) {
  SynthConfig c;
  c.seed = 3;
  c.count_per_class = 100;
  const auto m = synth_dataset(c, dir_ / "a");
  ASSERT_EQ(m.entries.size(), 200u);
  EXPECT_EQ(m.count(0), 100u);
  EXPECT_EQ(m.count(1), 100u);
  const auto reread = read_manifest(dir_ / "a" / "manifest.csv");
  EXPECT_EQ(reread.entries, m.entries);
  EXPECT_EQ(read_ppm(m.resolve(m.entries[3])), synth_sample(c, m.entries[3].label, 1));

  c.count_per_class = 4;
  const auto x = synth_dataset(c, dir_ / "x"), y = synth_dataset(c, dir_ / "y");
  for (std::size_t i = 0; i < x.entries.size(); ++i) {
    EXPECT_EQ(read_file_bytes(x.resolve(x.entries[i])), read_file_bytes(y.resolve(y.entries[i])));
  }
  EXPECT_EQ(read_file_bytes(dir_ / "x" / "manifest.csv"), read_file_bytes(dir_ / "y" / "manifest.csv"));
}

TEST(Checkpoint, EncodeDecodeRoundTrip) {
  const auto net = build_toy_net<float>(ToyVariant::Wht, 8, 32, 4);
  const auto ckpt = make_checkpoint(net, {{"epoch", "3"}});
  const auto bytes = encode_checkpoint(ckpt);
  ASSERT_GE(bytes.size(), 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "WHTC");
  EXPECT_EQ(bytes[4], 1);
  const auto back = decode_checkpoint(bytes);
  EXPECT_EQ(back, ckpt);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_EQ(back.meta("epoch"), "3");
  EXPECT_EQ(back.meta("arch"), "toy-wht");
  expect_code(ErrorCode::ArchMismatch, [&] { back.meta("missing"); });
}

TEST(Checkpoint, HoldsParametersAndBuffers) {
  const auto net = build_toy_net<float>(ToyVariant::Wht, 8, 32, 4);
  const auto ckpt = make_checkpoint(net);
  EXPECT_EQ(ckpt.tensors.size(), net.parameters().size() + net.buffers().size());
  for (const auto& [name, t] : net.parameters()) EXPECT_EQ(ckpt.tensors.at(name), t);
}

TEST(Checkpoint, DecodeErrors) {
  const auto bytes = encode_checkpoint(make_checkpoint(build_toy_net<float>(ToyVariant::Wht, 8, 32, 4)));
  auto bad = bytes;
  bad[0] = 'X';
  expect_code(ErrorCode::BadMagic, [&] { decode_checkpoint(bad); });
  bad = bytes;
  bad[4] = 2;
  expect_code(ErrorCode::VersionMismatch, [&] { decode_checkpoint(bad); });
  for (const std::size_t cut : {std::size_t{2}, std::size_t{6}, bytes.size() / 2, bytes.size() - 1}) {
    const std::vector<std::uint8_t> prefix(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    expect_code(ErrorCode::TruncatedFile, [&] { decode_checkpoint(prefix); });
  }
}

TEST(Checkpoint, ArchitectureMismatch) {
  const auto ckpt = make_checkpoint(build_toy_net<float>(ToyVariant::Wht, 16, 32, 4));
  auto narrow = build_toy_net<float>(ToyVariant::Wht, 8, 32, 4);
  expect_code(ErrorCode::ArchMismatch, [&] { load_weights(narrow, ckpt); });
  auto conv = build_toy_net<float>(ToyVariant::ConvBaseline, 16, 32, 4);
  expect_code(ErrorCode::ArchMismatch, [&] { load_weights(conv, ckpt); });

  auto damaged = ckpt;
  damaged.tensors.erase("head.weight");
  auto same = build_toy_net<float>(ToyVariant::Wht, 16, 32, 4);
  expect_code(ErrorCode::TensorShapeMismatch, [&] { load_weights(same, damaged); });
  damaged = ckpt;
  damaged.tensors.at("head.bias") = Tensor<float>({3});
  expect_code(ErrorCode::TensorShapeMismatch, [&] { load_weights(same, damaged); });
}

TEST_F(TempDir, SaveLoadPreservesForward) {
  auto net = build_toy_net<float>(ToyVariant::ConvBaseline, 8, 32, 8);
  Rng rng(33);
  for (auto& [name, t] : net.parameters())
    for (auto& v : t.values()) v += static_cast<float>(rng.uniform(-0.1, 0.1));
  const auto patch = testing_support::random_tensor(rng, {32, 32, 3}, 0.0, 1.0).cast<float>();
  const auto a = dir_ / "a.whtc", b = dir_ / "b.whtc";
  checkpoint_save(net, {{"epoch", "1"}}, a);
  const auto loaded = checkpoint_load(a);
  EXPECT_EQ(loaded.parameters(), net.parameters());
  EXPECT_EQ(forward_classify(loaded, patch), forward_classify(net, patch));
  checkpoint_save(loaded, {{"epoch", "1"}}, b);
  EXPECT_EQ(read_file_bytes(a), read_file_bytes(b));
}

TEST(Checkpoint, DoubleNetworksStoreFloatValues) {
  const auto net = build_toy_net<double>(ToyVariant::Wht, 8, 32, 9);
  const auto ckpt = make_checkpoint(net);
  const auto back = network_from_checkpoint<double>(ckpt);
  for (const auto& [name, t] : net.parameters()) {
    const auto& r = back.parameters().at(name);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(r[i], static_cast<double>(static_cast<float>(t[i])));
  }
}
