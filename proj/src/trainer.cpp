#include <algorithm>
#include <cmath>

#include "peatwht/pipeline.hpp"
#include "peatwht/rng.hpp"

namespace peatwht {

namespace {

constexpr std::uint64_t kSplitStream = 0x5EED5EED00000001ull;
constexpr std::uint64_t kOrderStream = 0x5EED5EED00000002ull;

bool is_frozen(const std::string& name, const std::set<std::string>& frozen) {
  return std::any_of(frozen.begin(), frozen.end(), [&](const std::string& p) { return name.starts_with(p); });
}

template <typename T>
void require_both_classes(const std::vector<Sample<T>>& samples, const char* what) {
  const bool fire = std::any_of(samples.begin(), samples.end(), [](const auto& s) { return s.label == kLabelFire; });
  const bool none = std::any_of(samples.begin(), samples.end(), [](const auto& s) { return s.label == kLabelNoFire; });
  if (!fire || !none) throw Error(ErrorCode::SingleClassDataset, std::string(what) + " lacks one of the two classes");
}

template <typename T>
std::string precision_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

}  // namespace

template <typename T>
std::vector<Sample<T>> load_samples(const Manifest& manifest, std::size_t input_size) {
  std::vector<Sample<T>> samples;
  samples.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    Tensor<T> image = to_tensor<T>(read_ppm(manifest.resolve(e)));
    if (image.dim(0) != input_size || image.dim(1) != input_size) image = resize_area(image, input_size, input_size);
    samples.push_back({std::move(image), e.label});
  }
  return samples;
}

template <typename T>
std::vector<Sample<T>> synth_samples(const SynthConfig& config) {
  config.validate();
  std::vector<Sample<T>> samples;
  samples.reserve(2 * config.count_per_class);
  for (std::size_t i = 0; i < config.count_per_class; ++i) {
    for (const int label : {kLabelNoFire, kLabelFire}) {
      samples.push_back({to_tensor<T>(synth_sample(config, label, i)), label});
    }
  }
  return samples;
}

template <typename T>
std::pair<std::vector<Sample<T>>, std::vector<Sample<T>>> split_samples(std::vector<Sample<T>> samples,
                                                                         std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "no samples to split");
  Rng rng(seed ^ kSplitStream);
  rng.shuffle(std::span<Sample<T>>(samples));
  const std::size_t n_train = std::max<std::size_t>(1, (samples.size() * 8 + 5) / 10);
  std::vector<Sample<T>> validation(std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(n_train)),
                                    std::make_move_iterator(samples.end()));
  samples.resize(n_train);
  require_both_classes(samples, "training split");
  return {std::move(samples), std::move(validation)};
}

template <typename T>
EvalResult evaluate(const Network<T>& net, const std::vector<Sample<T>>& samples, double threshold) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to evaluate");
  EvalResult result;
  for (const auto& s : samples) {
    const double p_fire = static_cast<double>(forward_classify(net, s.image)[kFireClass]);
    result.counts.add(p_fire >= threshold, s.label == kLabelFire);
  }
  result.metrics = compute_metrics(result.counts);
  return result;
}

template <typename T>
EvalResult evaluate(const Network<T>& net, const Manifest& manifest, double threshold) {
  if (manifest.entries.empty()) throw Error(ErrorCode::EmptyDataset, "manifest is empty");
  return evaluate(net, load_samples<T>(manifest, net.descriptor().input_size), threshold);
}

template <typename T>
RunRecord fit(Network<T>& net, const std::vector<Sample<T>>& train, const std::vector<Sample<T>>& validation,
              const TrainConfig& config, const std::set<std::string>& frozen) {
  config.validate();
  if (train.empty()) throw Error(ErrorCode::EmptyDataset, "empty training set");
  RunRecord record;
  record.arch = net.descriptor().name;
  record.width = net.descriptor().layers.front().out_channels;
  record.input_size = net.descriptor().input_size;
  record.config = config;
  record.precision = precision_name<T>();
  record.train_samples = train.size();
  record.validation_samples = validation.size();

  TensorMap<T> velocity;
  for (const auto& [name, t] : net.parameters()) velocity.emplace(name, Tensor<T>(t.shape()));
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(config.seed ^ kOrderStream);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      TensorMap<T> batch_grad;
      for (std::size_t k = start; k < end; ++k) {
        const Sample<T>& s = train[order[k]];
        const ForwardTrace<T> trace = net.forward(s.image);
        const LossResult<T> loss = softmax_cross_entropy(trace.logits(), static_cast<std::size_t>(s.label));
        loss_sum += static_cast<double>(loss.loss);
        TensorMap<T> grads = net.backward(trace, loss.dlogits);
        for (auto& [name, g] : grads) {
          auto [it, inserted] = batch_grad.try_emplace(name, std::move(g));
          if (!inserted) {
            for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
          }
        }
      }
      const T inv = T(1) / static_cast<T>(end - start);
      for (auto& [name, param] : net.parameters()) {
        if (is_frozen(name, frozen)) continue;
        Tensor<T>& g = batch_grad.at(name);
        for (auto& v : g.values()) v *= inv;
        sgd_step<T>(param.data(), g.data(), velocity.at(name).data(), config);
        if (name.ends_with(".lambda")) {
          for (auto& v : param.values()) v = std::max(v, T(0));
        }
      }
    }
    EpochRecord er;
    er.epoch = epoch;
    er.train_loss = loss_sum / static_cast<double>(train.size());
    if (!validation.empty()) {
      const EvalResult ev = evaluate(net, validation);
      er.validation = ev.metrics;
      er.validation_counts = ev.counts;
    }
    record.epochs.push_back(er);
    if (!std::isfinite(er.train_loss)) {
      record.early_stop_reason = "non-finite training loss at epoch " + std::to_string(epoch);
      break;
    }
  }
  return record;
}

template <typename T>
TrainResult<T> train(const Manifest& manifest, const ModelSpec& model, const TrainConfig& config) {
  if (config.epochs < 1) throw Error(ErrorCode::BadConfig, "epochs must be >= 1");
  if (manifest.entries.empty()) throw Error(ErrorCode::EmptyDataset, "manifest is empty");
  if (manifest.count(kLabelFire) == 0 || manifest.count(kLabelNoFire) == 0) {
    throw Error(ErrorCode::SingleClassDataset, "manifest needs both labels");
  }
  Network<T> net = build_toy_net<T>(model.variant, model.width, model.input_size, config.seed);
  auto [train_set, validation] = split_samples(load_samples<T>(manifest, model.input_size), config.seed);
  RunRecord record = fit(net, train_set, validation, config);
  record.mode = "train";
  return {std::move(net), std::move(record)};
}

template <typename T>
TrainResult<T> finetune(const Network<T>& source, const Manifest& manifest, const TrainConfig& config,
                        bool freeze_stem) {
  if (manifest.entries.empty()) throw Error(ErrorCode::EmptyDataset, "manifest is empty");
  if (manifest.count(kLabelFire) == 0 || manifest.count(kLabelNoFire) == 0) {
    throw Error(ErrorCode::SingleClassDataset, "manifest needs both labels");
  }
  Network<T> net = source;
  auto [train_set, validation] = split_samples(load_samples<T>(manifest, net.descriptor().input_size), config.seed);
  std::set<std::string> frozen;
  if (freeze_stem) frozen.insert("stem.");
  RunRecord record = fit(net, train_set, validation, config, frozen);
  record.mode = "finetune";
  record.freeze_stem = freeze_stem;
  return {std::move(net), std::move(record)};
}

TransferOutcome run_transfer_trial(const TransferProtocol& protocol, std::uint64_t seed) {
  const ModelSpec& model = protocol.model;
  auto data = [&](std::uint64_t stream, std::size_t per_class, double contrast) {
    SynthConfig c;
    c.seed = seed * 1000 + stream;
    c.count_per_class = per_class;
    c.resolution = model.input_size;
    c.smoke_contrast = contrast;
    return synth_samples<float>(c);
  };
  const auto source = data(1, protocol.source_per_class, protocol.source_contrast);
  const auto target = data(2, protocol.target_per_class, protocol.target_contrast);
  const auto test = data(3, protocol.test_per_class, protocol.target_contrast);

  TrainConfig scratch_cfg;
  scratch_cfg.epochs = protocol.epochs;
  scratch_cfg.learning_rate = protocol.scratch_learning_rate;
  scratch_cfg.seed = seed;

  Network<float> pretrained = build_toy_net<float>(model.variant, model.width, model.input_size, seed);
  fit(pretrained, source, {}, scratch_cfg);

  Network<float> scratch = build_toy_net<float>(model.variant, model.width, model.input_size, seed + 7919);
  fit(scratch, target, {}, scratch_cfg);

  TrainConfig finetune_cfg = scratch_cfg;
  finetune_cfg.learning_rate = protocol.finetune_learning_rate;
  Network<float> finetuned = pretrained;
  fit(finetuned, target, {}, finetune_cfg);

  return {seed, evaluate(scratch, test).metrics, evaluate(finetuned, test).metrics};
}

nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"validation", to_json(e.validation)},
                      {"validation_counts", to_json(e.validation_counts)}});
  }
  nlohmann::json j = {
      {"mode", r.mode},
      {"arch", r.arch},
      {"width", r.width},
      {"input_size", r.input_size},
      {"precision", r.precision},
      {"config",
       {{"epochs", r.config.epochs},
        {"epoch_meaning", "full passes over the training split"},
        {"learning_rate", r.config.learning_rate},
        {"momentum", r.config.momentum},
        {"batch_size", r.config.batch_size},
        {"seed", r.config.seed},
        {"optimizer", "sgd-momentum"},
        {"loss", "softmax-cross-entropy"},
        {"split", "80/20 seeded shuffle"}}},
      {"train_samples", r.train_samples},
      {"validation_samples", r.validation_samples},
      {"epochs", epochs},
      {"checkpoint", r.checkpoint_path},
      {"freeze_stem", r.freeze_stem},
  };
  j["transfer_source"] = r.transfer_source ? nlohmann::json(*r.transfer_source) : nlohmann::json(nullptr);
  if (r.early_stop_reason) j["early_stop_reason"] = *r.early_stop_reason;
  return j;
}

#define PEATWHT_INSTANTIATE_TRAINER(T)                                                                           \
  template std::vector<Sample<T>> load_samples(const Manifest&, std::size_t);                                  \
  template std::vector<Sample<T>> synth_samples(const SynthConfig&);                                          \
  template std::pair<std::vector<Sample<T>>, std::vector<Sample<T>>> split_samples(std::vector<Sample<T>>,    \
                                                                                   std::uint64_t);            \
  template EvalResult evaluate(const Network<T>&, const std::vector<Sample<T>>&, double);                     \
  template EvalResult evaluate(const Network<T>&, const Manifest&, double);                                   \
  template RunRecord fit(Network<T>&, const std::vector<Sample<T>>&, const std::vector<Sample<T>>&,           \
                         const TrainConfig&, const std::set<std::string>&);                                   \
  template TrainResult<T> train(const Manifest&, const ModelSpec&, const TrainConfig&);                       \
  template TrainResult<T> finetune(const Network<T>&, const Manifest&, const TrainConfig&, bool);

PEATWHT_INSTANTIATE_TRAINER(float)
PEATWHT_INSTANTIATE_TRAINER(double)

#undef PEATWHT_INSTANTIATE_TRAINER

}  // namespace peatwht
