// peatwht: transform, train, fine-tune, evaluate and detect with
// Walsh-Hadamard toy residual networks.
//
// Exit codes: 0 success (no fire for detect), 1 fire detected, 2 usage
// error, 3 data error.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "peatwht/arch.hpp"
#include "peatwht/checkpoint.hpp"
#include "peatwht/fwht.hpp"
#include "peatwht/pipeline.hpp"
#include "peatwht/rng.hpp"

namespace fs = std::filesystem;
using namespace peatwht;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFire = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct Globals {
  std::uint64_t seed = 0;
  std::string precision = "f32";
  fs::path out_dir = ".";
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// --- transform ---

struct TransformArgs {
  fs::path input;
  bool inverse = false;
  bool normalized = false;
};

int run_transform(const TransformArgs& a) {
  std::ifstream in(a.input);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + a.input.string());
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream is(line);
    double v;
    if (!(is >> v)) throw Error(ErrorCode::BadConfig, fmt::format("line {}: not a number", line_no));
    values.push_back(v);
  }
  std::vector<double> out;
  if (a.inverse) {
    out = ifwht(Spectrum{values, a.normalized});
  } else {
    out = fwht(values, a.normalized).coefficients;
  }
  for (const double v : out) fmt::print("{:.12g}\n", v);
  return kExitOk;
}

// --- synth ---

struct SynthArgs {
  std::size_t count = 100;
  std::size_t resolution = 32;
  double contrast = 0.6;
  std::size_t scene_height = 0;
  std::size_t scene_width = 0;
  std::size_t scene_blobs = 3;
  double blob_sigma = 60.0;
};

int run_synth(const Globals& g, const SynthArgs& a) {
  if (a.scene_height > 0 || a.scene_width > 0) {
    Rng rng(g.seed);
    std::vector<SmokeBlob> blobs;
    for (std::size_t i = 0; i < a.scene_blobs; ++i) {
      blobs.push_back({rng.uniform(0.15, 0.85) * static_cast<double>(a.scene_height),
                       rng.uniform(0.15, 0.85) * static_cast<double>(a.scene_width), a.blob_sigma, a.contrast});
    }
    const fs::path path = g.out_dir / "scene.ppm";
    write_ppm(render_scene(g.seed, a.scene_height, a.scene_width, blobs, a.blob_sigma), path);
    fmt::print("{}\n", path.string());
    return kExitOk;
  }
  SynthConfig config;
  config.seed = g.seed;
  config.count_per_class = a.count;
  config.resolution = a.resolution;
  config.smoke_contrast = a.contrast;
  const Manifest m = synth_dataset(config, g.out_dir);
  fmt::print("{} ({} images)\n", (g.out_dir / "manifest.csv").string(), m.entries.size());
  return kExitOk;
}

// --- train / finetune ---

struct TrainArgs {
  fs::path manifest;
  fs::path source;
  std::string arch = "toy-wht";
  std::size_t width = 8;
  std::size_t input_size = 32;
  std::size_t epochs = 25;
  double learning_rate = -1.0;  // mode-dependent default
  double momentum = 0.9;
  std::size_t batch_size = 8;
  bool freeze_stem = false;
};

template <typename T>
int run_training(const Globals& g, const TrainArgs& a, bool finetuning) {
  TrainConfig config;
  config.epochs = a.epochs;
  config.learning_rate = a.learning_rate > 0 ? a.learning_rate : (finetuning ? 0.001 : 0.01);
  config.momentum = a.momentum;
  config.batch_size = a.batch_size;
  config.seed = g.seed;
  const Manifest manifest = read_manifest(a.manifest);

  TrainResult<T> result;
  if (finetuning) {
    const Network<T> source = network_from_checkpoint<T>(load_checkpoint(a.source));
    result = finetune(source, manifest, config, a.freeze_stem);
    result.record.transfer_source = a.source.string();
  } else {
    const auto variant = parse_toy_variant(a.arch);
    if (!variant) throw Error(ErrorCode::BadConfig, "unknown --arch '" + a.arch + "' (toy-wht or toy-conv)");
    result = train<T>(manifest, {*variant, a.width, a.input_size}, config);
  }
  const fs::path ckpt_path = g.out_dir / "checkpoint.whtc";
  result.record.checkpoint_path = ckpt_path.string();
  checkpoint_save(result.net,
                  {{"epoch", std::to_string(result.record.epochs.size())},
                   {"learning_rate", fmt::format("{}", config.learning_rate)},
                   {"momentum", fmt::format("{}", config.momentum)},
                   {"batch_size", std::to_string(config.batch_size)},
                   {"mode", result.record.mode}},
                  ckpt_path);
  write_text(g.out_dir / "run.json", dump(to_json(result.record)));
  for (const auto& e : result.record.epochs) {
    fmt::print("epoch {:>3}  loss {:.6f}  val acc {:.4f}  f1 {:.4f}\n", e.epoch, e.train_loss, e.validation.accuracy,
               e.validation.f1);
  }
  fmt::print("{}\n", ckpt_path.string());
  return kExitOk;
}

// --- eval ---

struct EvalArgs {
  fs::path checkpoint;
  fs::path manifest;
  double threshold = 0.5;
  bool json = false;
};

template <typename T>
int run_eval(const Globals& g, const EvalArgs& a) {
  const Network<T> net = network_from_checkpoint<T>(load_checkpoint(a.checkpoint));
  const EvalResult r = evaluate(net, read_manifest(a.manifest), a.threshold);
  const nlohmann::json j = {{"checkpoint", a.checkpoint.string()},
                            {"manifest", a.manifest.string()},
                            {"threshold", a.threshold},
                            {"metrics", to_json(r.metrics)},
                            {"counts", to_json(r.counts)}};
  write_text(g.out_dir / "eval.json", dump(j));
  if (a.json) {
    std::cout << dump(j);
  } else {
    std::cout << format_metrics_table(r.metrics, r.counts);
  }
  return kExitOk;
}

// --- detect ---

struct DetectArgs {
  fs::path checkpoint;
  fs::path image;
  double threshold = 0.5;
  std::size_t block = kDefaultBlock;
  fs::path overlay;
  fs::path json;
  bool digits = false;
};

template <typename T>
int run_detect(const Globals& g, const DetectArgs& a) {
  if (!(a.threshold > 0.0 && a.threshold <= 1.0)) throw Error(ErrorCode::BadConfig, "--threshold must lie in (0, 1]");
  const Network<T> net = network_from_checkpoint<T>(load_checkpoint(a.checkpoint));
  const Detection d = detect(net, read_ppm(a.image), a.threshold, a.block, {.border = 3, .digits = a.digits});
  const fs::path overlay = a.overlay.empty() ? g.out_dir / "overlay.ppm" : a.overlay;
  const fs::path json = a.json.empty() ? g.out_dir / "scores.json" : a.json;
  write_ppm(d.overlay.image, overlay);
  write_text(json, score_grid_json(d.grid, a.image.string()));
  const bool fire = d.grid.any_detection();
  fmt::print("{} windows, {} ({})\n", d.grid.scores.size(), fire ? "fire detected" : "no fire",
             d.grid.fallback ? "whole-image fallback" : fmt::format("{}x{} grid", d.grid.spec.rows, d.grid.spec.cols));
  return fire ? kExitFire : kExitOk;
}

// --- params ---

struct ParamsArgs {
  std::string arch = "resnet50";
  std::size_t classes = 2;
  std::size_t width = 8;
  std::size_t input_size = 32;
  bool json = false;
};

int run_params(const ParamsArgs& a) {
  const ArchDescriptor d = named_descriptor(a.arch, a.classes, a.width, a.input_size);
  if (a.json) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : d.layers) {
      layers.push_back({{"name", l.name},
                        {"kind", to_string(l.kind)},
                        {"in", l.in_channels},
                        {"out", l.out_channels},
                        {"params", layer_params(l)}});
    }
    std::cout << dump({{"arch", d.name},
                       {"classes", d.num_classes},
                       {"total", count_params(d)},
                       {"assumptions", d.assumptions},
                       {"layers", layers}});
  } else {
    std::cout << format_param_table(d);
  }
  return kExitOk;
}

// --- bench ---

struct BenchArgs {
  std::vector<std::size_t> sizes;
  int repeats = 5;
};

int run_bench(const BenchArgs& a) {
  std::vector<std::size_t> sizes = a.sizes;
  if (sizes.empty()) {
    for (int e = 10; e <= 20; ++e) sizes.push_back(std::size_t{1} << e);
  }
  for (const std::size_t n : sizes) {
    if (!is_power_of_two(n)) throw Error(ErrorCode::BadConfig, "--sizes entry " + std::to_string(n) + " is not a power of two");
  }
  std::cout << dump(to_json(bench(sizes, a.repeats)));
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadConfig:
    case ErrorCode::InvalidDescriptor:
    case ErrorCode::BadWidth:
    case ErrorCode::SizeTooLarge:
    case ErrorCode::OrderTooLarge:
      return kExitUsage;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Walsh-Hadamard residual networks for block-tiled smoke detection"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for data generation, initialization and shuffling");
  app.add_option("--precision", g.precision, "Arithmetic for train/finetune/eval/detect")
      ->check(CLI::IsMember({"f32", "f64"}));
  app.add_option("--out-dir", g.out_dir, "Directory for output artifacts");

  TransformArgs ta;
  auto* transform = app.add_subcommand("transform", "Walsh-Hadamard transform of a text vector (one value per line)");
  transform->add_option("--input", ta.input)->required();
  transform->add_flag("--inverse", ta.inverse);
  transform->add_flag("--normalized", ta.normalized, "Orthonormal scaling instead of the +/-1 matrix");

  SynthArgs sa;
  auto* synth = app.add_subcommand(
      "synth", "Generate a seeded synthetic smoke dataset (P6 PPM; convert other formats externally)");
  synth->add_option("--count", sa.count, "Images per class");
  synth->add_option("--resolution", sa.resolution);
  synth->add_option("--contrast", sa.contrast, "Smoke blob amplitude in [0, 1]");
  synth->add_option("--scene-height", sa.scene_height, "Render one large scene instead of a dataset");
  synth->add_option("--scene-width", sa.scene_width);
  synth->add_option("--scene-blobs", sa.scene_blobs);
  synth->add_option("--blob-sigma", sa.blob_sigma, "Scene blob radius in pixels");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a toy network from scratch");
  train_cmd->add_option("--manifest", tr.manifest)->required();
  train_cmd->add_option("--arch", tr.arch, "toy-wht or toy-conv");
  train_cmd->add_option("--width", tr.width);
  train_cmd->add_option("--input-size", tr.input_size);
  train_cmd->add_option("--epochs", tr.epochs);
  train_cmd->add_option("--lr", tr.learning_rate, "Learning rate (default 0.01)");
  train_cmd->add_option("--momentum", tr.momentum);
  train_cmd->add_option("--batch", tr.batch_size);
  TrainArgs ft;
  auto* finetune_cmd = app.add_subcommand("finetune", "Fine-tune a checkpoint on a target manifest");
  finetune_cmd->add_option("--source", ft.source)->required();
  finetune_cmd->add_option("--manifest", ft.manifest)->required();
  finetune_cmd->add_flag("--freeze-stem", ft.freeze_stem);
  finetune_cmd->add_option("--epochs", ft.epochs);
  finetune_cmd->add_option("--lr", ft.learning_rate, "Learning rate (default 0.001)");
  finetune_cmd->add_option("--momentum", ft.momentum);
  finetune_cmd->add_option("--batch", ft.batch_size);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Accuracy, precision, recall and F1 on a manifest");
  eval->add_option("--checkpoint", ea.checkpoint)->required();
  eval->add_option("--manifest", ea.manifest)->required();
  eval->add_option("--threshold", ea.threshold);
  eval->add_flag("--json", ea.json, "Print JSON instead of the text table");

  DetectArgs da;
  auto* detect_cmd = app.add_subcommand("detect", "Score overlapping 2x2-block windows of a frame");
  detect_cmd->add_option("--checkpoint", da.checkpoint)->required();
  detect_cmd->add_option("--image", da.image)->required();
  detect_cmd->add_option("--threshold", da.threshold);
  detect_cmd->add_option("--block", da.block, "Block edge in pixels");
  detect_cmd->add_option("--overlay", da.overlay, "Overlay PPM path (default <out-dir>/overlay.ppm)");
  detect_cmd->add_option("--json", da.json, "Score-grid JSON path (default <out-dir>/scores.json)");
  detect_cmd->add_flag("--digits", da.digits, "Burn probabilities into the overlay");

  ParamsArgs pa;
  auto* params = app.add_subcommand("params", "Per-layer parameter table");
  params->add_option("--arch", pa.arch, "resnet50 | wht-resnet50-preset | wht-resnet50-all | toy-conv | toy-wht");
  params->add_option("--classes", pa.classes);
  params->add_option("--width", pa.width);
  params->add_option("--input-size", pa.input_size);
  params->add_flag("--json", pa.json);

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Time fwht against the O(N^2) transform");
  bench_cmd->add_option("--sizes", ba.sizes, "Powers of two (default 2^10..2^20)")->delimiter(',');
  bench_cmd->add_option("--repeats", ba.repeats);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  const bool f64 = g.precision == "f64";
  try {
    if (*transform) return run_transform(ta);
    if (*synth) return run_synth(g, sa);
    if (*train_cmd) return f64 ? run_training<double>(g, tr, false) : run_training<float>(g, tr, false);
    if (*finetune_cmd) return f64 ? run_training<double>(g, ft, true) : run_training<float>(g, ft, true);
    if (*eval) return f64 ? run_eval<double>(g, ea) : run_eval<float>(g, ea);
    if (*detect_cmd) return f64 ? run_detect<double>(g, da) : run_detect<float>(g, da);
    if (*params) return run_params(pa);
    if (*bench_cmd) return run_bench(ba);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
