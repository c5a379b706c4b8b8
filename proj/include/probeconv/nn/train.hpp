#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "probeconv/nn/data.hpp"
#include "probeconv/nn/network.hpp"
#include "probeconv/nn/optim.hpp"

#include <json.hpp>

namespace probeconv::nn {

struct DatasetConfig {
  enum class Kind { mnist, cifar10, synthetic };
  Kind kind = Kind::synthetic;
  std::string dir;          // mnist/cifar10 file directory
  int train_limit = 0;      // 0 = all
  int test_limit = 0;
  // synthetic
  int synth_train = 256;
  int synth_test = 128;
  int synth_height = 8;
  int synth_width = 8;
  double synth_noise = 0.25;
};

enum class LrSchedule { constant, cosine };

struct TrainConfig {
  OptimizerConfig optimizer;
  int batch = 1;
  int epochs = 1;
  std::uint64_t seed = 0;
  GradMode mode = GradMode::exact;
  /// Learning-rate multiplier applied only when mode != exact; 1 = no scaling.
  double probed_lr_scale = 1.0;
  LrSchedule schedule = LrSchedule::constant;
  DatasetConfig data;

  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_loss = 0.0;
  double test_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  double final_train_acc = 0.0;
  double final_test_acc = 0.0;
  /// Activation scalars held by conv layers during the last training step.
  std::size_t conv_activation_scalars = 0;
};

/// Loads the dataset named by the config (mnist/cifar10 from cfg.data.dir,
/// synthetic generated from the seed).
std::pair<Dataset, Dataset> load_datasets(const DatasetConfig& cfg,
                                          std::uint64_t seed);

/// Deterministic training loop: shuffles, init, dropout, and probe draws all
/// derive from config.seed, so a run replays bit-exactly single-threaded.
TrainResult train(Network& net, const Dataset& train_data,
                  const Dataset& test_data, const TrainConfig& config);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

EvalResult evaluate(Network& net, const Dataset& data, int batch);

/// Per-layer gradient-variability study: per-coefficient mean and std of the
/// conv weight gradients across `samples` freshly drawn minibatches (and
/// fresh probe seeds in probed modes), summarized by quantiles.
struct GradNoiseRow {
  std::string layer;
  std::string mode;
  int r = 0;
  double std_q25 = 0.0;
  double std_median = 0.0;
  double std_q75 = 0.0;
  double mean_abs_median = 0.0;
};

std::vector<GradNoiseRow> grad_noise_study(const NetworkSpec& spec,
                                           const Dataset& data,
                                           std::span<const GradMode> modes,
                                           int samples, int batch,
                                           std::uint64_t seed);

}  // namespace probeconv::nn
