#pragma once

// Training, transfer fine-tuning, evaluation, full-frame detection and
// transform benchmarking.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "peatwht/dataset.hpp"
#include "peatwht/network.hpp"
#include "peatwht/tiling.hpp"

namespace peatwht {

// --- Metrics ---

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  void add(bool predicted_fire, bool actual_fire) noexcept;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the matching denominator was zero and the value defaulted to 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

/// acc = (tp + tn) / total, p = tp / (tp + fp), r = tp / (tp + fn),
/// f1 = 2pr / (p + r). Throws EmptyDataset when total is 0.
Metrics compute_metrics(const ConfusionMatrix& cm);

/// Harmonic mean of precision and recall; 0 when both are 0.
double f1_score(double precision, double recall) noexcept;

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const Metrics& m);

/// Aligned two-block text table of metrics and confusion counts.
std::string format_metrics_table(const Metrics& m, const ConfusionMatrix& cm);

// --- Data ---

template <typename T>
struct Sample {
  Tensor<T> image;  // input_size x input_size x 3 in [0, 1]
  int label = 0;
};

/// Decodes every manifest image and resamples it to the network input.
template <typename T>
std::vector<Sample<T>> load_samples(const Manifest& manifest, std::size_t input_size);

/// In-memory equivalent of synth_dataset(), same images, same order.
template <typename T>
std::vector<Sample<T>> synth_samples(const SynthConfig& config);

// --- Training ---

struct ModelSpec {
  ToyVariant variant = ToyVariant::Wht;
  std::size_t width = 8;
  std::size_t input_size = 32;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  Metrics validation;
  ConfusionMatrix validation_counts;
};

struct RunRecord {
  std::string mode;  // "train" or "finetune"
  std::string arch;
  std::size_t width = 0;
  std::size_t input_size = 0;
  TrainConfig config;
  std::string precision = "f32";
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
  std::vector<EpochRecord> epochs;
  std::string checkpoint_path;
  std::optional<std::string> transfer_source;
  bool freeze_stem = false;
  std::optional<std::string> early_stop_reason;
};

nlohmann::json to_json(const RunRecord& record);

template <typename T>
struct TrainResult {
  Network<T> net;
  RunRecord record;
};

/// Seeded 80/20 split of `samples` (both parts keep their shuffled order).
/// Throws SingleClassDataset when the training part lacks a class.
template <typename T>
std::pair<std::vector<Sample<T>>, std::vector<Sample<T>>> split_samples(std::vector<Sample<T>> samples,
                                                                         std::uint64_t seed);

/// Runs config.epochs epochs of momentum SGD over `train` in seeded
/// shuffled order, averaging gradients over each mini-batch, and evaluates on
/// `validation` after every epoch. Tensors whose names start with any prefix
/// in `frozen` are never updated.
template <typename T>
RunRecord fit(Network<T>& net, const std::vector<Sample<T>>& train, const std::vector<Sample<T>>& validation,
              const TrainConfig& config, const std::set<std::string>& frozen = {});

/// From-scratch training on a manifest with a seeded 80/20 split.
template <typename T>
TrainResult<T> train(const Manifest& manifest, const ModelSpec& model, const TrainConfig& config);

/// Copies every tensor from `source` and continues training on the target
/// manifest. With freeze_stem the `stem.` tensors stay fixed.
template <typename T>
TrainResult<T> finetune(const Network<T>& source, const Manifest& manifest, const TrainConfig& config,
                        bool freeze_stem = false);

// --- Evaluation ---

struct EvalResult {
  ConfusionMatrix counts;
  Metrics metrics;
};

/// Patch-level classification at fire probability >= threshold.
template <typename T>
EvalResult evaluate(const Network<T>& net, const std::vector<Sample<T>>& samples, double threshold = 0.5);

template <typename T>
EvalResult evaluate(const Network<T>& net, const Manifest& manifest, double threshold = 0.5);

// --- Detection ---

struct Detection {
  ScoreGrid grid;
  Overlay overlay;
};

/// Scores every 2x2-block window, falling back to whole-image
/// classification when the grid has fewer than two block rows or columns.
template <typename T>
Detection detect(const Network<T>& net, const RgbImage& image, double threshold, std::size_t block = kDefaultBlock,
                 const OverlayOptions& overlay = {});

// --- Transfer protocol ---

/// Source: high-contrast synthetic smoke. Target: low-contrast smoke with few
/// training images, evaluated on a separate target test set.
struct TransferProtocol {
  ModelSpec model;
  std::size_t source_per_class = 300;
  double source_contrast = 0.6;
  std::size_t target_per_class = 5;
  double target_contrast = 0.3;
  std::size_t test_per_class = 100;
  std::size_t epochs = 25;
  double scratch_learning_rate = 0.01;
  double finetune_learning_rate = 0.001;
};

struct TransferOutcome {
  std::uint64_t seed = 0;
  Metrics scratch;
  Metrics finetuned;
};

TransferOutcome run_transfer_trial(const TransferProtocol& protocol, std::uint64_t seed);

// --- Benchmark ---

inline constexpr std::size_t kMaxBenchSize = std::size_t{1} << 22;
inline constexpr std::size_t kMaxNaiveBenchSize = std::size_t{1} << 12;

struct BenchRow {
  std::size_t n = 0;
  double fwht_seconds = 0.0;  // median per call
  std::optional<double> naive_seconds;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double max_doubling_ratio = 0.0;  // over consecutive sizes >= 2^14
};

/// Times fwht (and the O(N^2) reference up to 2^12) for each power-of-two
/// size. Throws SizeTooLarge above 2^22, LengthNotPowerOfTwo otherwise.
BenchReport bench(const std::vector<std::size_t>& sizes, int repeats = 5);

nlohmann::json to_json(const BenchReport& report);

}  // namespace peatwht
