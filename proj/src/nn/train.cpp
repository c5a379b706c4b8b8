#include "probeconv/nn/train.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "probeconv/errors.hpp"
#include "probeconv/stats.hpp"

namespace probeconv::nn {

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    const auto& oj = j.at("optimizer");
    const std::string kind = oj.at("type").get<std::string>();
    if (kind == "sgd") {
      c.optimizer.kind = OptimizerConfig::Kind::sgd;
    } else if (kind == "adam") {
      c.optimizer.kind = OptimizerConfig::Kind::adam;
    } else {
      throw spec_error("optimizer type must be sgd or adam");
    }
    c.optimizer.lr = oj.at("lr").get<double>();
    c.optimizer.beta1 = oj.value("beta1", 0.9);
    c.optimizer.beta2 = oj.value("beta2", 0.999);
    c.optimizer.eps = oj.value("eps", 1e-8);
    if (c.optimizer.lr <= 0.0) throw spec_error("lr must be positive");

    c.batch = j.at("batch").get<int>();
    if (c.batch < 1) throw spec_error("batch must be >= 1");
    c.epochs = j.at("epochs").get<int>();
    if (c.epochs < 1) throw spec_error("epochs must be >= 1");
    c.seed = j.value("seed", std::uint64_t{0});
    c.mode = grad_mode_from_name(j.value("mode", "exact"));
    c.probed_lr_scale = j.value("probed_lr_scale", 1.0);
    const std::string sched = j.value("schedule", "constant");
    if (sched == "constant") {
      c.schedule = LrSchedule::constant;
    } else if (sched == "cosine") {
      c.schedule = LrSchedule::cosine;
    } else {
      throw spec_error("schedule must be constant or cosine");
    }

    const auto& dj = j.at("dataset");
    const std::string dkind = dj.at("type").get<std::string>();
    if (dkind == "mnist") {
      c.data.kind = DatasetConfig::Kind::mnist;
      c.data.dir = dj.at("dir").get<std::string>();
    } else if (dkind == "cifar10") {
      c.data.kind = DatasetConfig::Kind::cifar10;
      c.data.dir = dj.at("dir").get<std::string>();
    } else if (dkind == "synthetic") {
      c.data.kind = DatasetConfig::Kind::synthetic;
      c.data.synth_train = dj.value("train", 256);
      c.data.synth_test = dj.value("test", 128);
      c.data.synth_height = dj.value("height", 8);
      c.data.synth_width = dj.value("width", 8);
      c.data.synth_noise = dj.value("noise", 0.25);
    } else {
      throw spec_error("dataset type must be mnist, cifar10, or synthetic");
    }
    c.data.train_limit = dj.value("train_limit", 0);
    c.data.test_limit = dj.value("test_limit", 0);
  } catch (const nlohmann::json::exception& e) {
    throw spec_error(std::string("train config: ") + e.what());
  }
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open train config: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw spec_error(std::string("train config parse: ") + e.what());
  }
  return from_json(j);
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j;
  j["optimizer"] = {
      {"type", optimizer.kind == OptimizerConfig::Kind::sgd ? "sgd" : "adam"},
      {"lr", optimizer.lr},
      {"beta1", optimizer.beta1},
      {"beta2", optimizer.beta2},
      {"eps", optimizer.eps}};
  j["batch"] = batch;
  j["epochs"] = epochs;
  j["seed"] = seed;
  j["mode"] = grad_mode_name(mode);
  j["probed_lr_scale"] = probed_lr_scale;
  j["schedule"] = schedule == LrSchedule::constant ? "constant" : "cosine";
  nlohmann::json dj;
  switch (data.kind) {
    case DatasetConfig::Kind::mnist: dj["type"] = "mnist"; dj["dir"] = data.dir; break;
    case DatasetConfig::Kind::cifar10: dj["type"] = "cifar10"; dj["dir"] = data.dir; break;
    case DatasetConfig::Kind::synthetic:
      dj["type"] = "synthetic";
      dj["train"] = data.synth_train;
      dj["test"] = data.synth_test;
      dj["height"] = data.synth_height;
      dj["width"] = data.synth_width;
      dj["noise"] = data.synth_noise;
      break;
  }
  dj["train_limit"] = data.train_limit;
  dj["test_limit"] = data.test_limit;
  j["dataset"] = dj;
  return j;
}

std::pair<Dataset, Dataset> load_datasets(const DatasetConfig& cfg,
                                          std::uint64_t seed) {
  namespace fs = std::filesystem;
  switch (cfg.kind) {
    case DatasetConfig::Kind::mnist: {
      const fs::path dir(cfg.dir);
      Dataset train = load_mnist_idx(dir / "train-images-idx3-ubyte",
                                     dir / "train-labels-idx1-ubyte",
                                     cfg.train_limit);
      Dataset test = load_mnist_idx(dir / "t10k-images-idx3-ubyte",
                                    dir / "t10k-labels-idx1-ubyte",
                                    cfg.test_limit);
      return {std::move(train), std::move(test)};
    }
    case DatasetConfig::Kind::cifar10: {
      const fs::path dir(cfg.dir);
      std::vector<fs::path> train_files;
      for (int i = 1; i <= 5; ++i)
        train_files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
      Dataset train = load_cifar10_binary(train_files, cfg.train_limit);
      Dataset test =
          load_cifar10_binary({dir / "test_batch.bin"}, cfg.test_limit);
      return {std::move(train), std::move(test)};
    }
    case DatasetConfig::Kind::synthetic: {
      const ImageShape shape{cfg.synth_height, cfg.synth_width};
      Dataset train = synthetic_separable(cfg.synth_train, shape,
                                          cfg.synth_noise, seed ^ 0x7472ULL);
      Dataset test = synthetic_separable(cfg.synth_test, shape, cfg.synth_noise,
                                         seed ^ 0x7465ULL);
      return {std::move(train), std::move(test)};
    }
  }
  throw spec_error("load_datasets: unknown dataset kind");
}

EvalResult evaluate(Network& net, const Dataset& data, int batch) {
  StepContext ctx;
  ctx.training = false;
  ctx.mode = GradMode::exact;

  EvalResult res;
  int correct = 0;
  double loss = 0.0;
  int done = 0;
  while (done < data.count()) {
    const int bsz = std::min(batch, data.count() - done);
    std::vector<int> idx(static_cast<size_t>(bsz));
    for (int i = 0; i < bsz; ++i) idx[size_t(i)] = done + i;
    const ChannelTensor x = make_batch(data, idx);
    const auto labels = batch_labels(data, idx);
    const ChannelTensor logp = net.forward(x, ctx);
    const LossResult l = nll_loss(logp, labels);
    loss += l.loss * bsz;
    correct += l.correct;
    done += bsz;
  }
  res.loss = loss / double(data.count());
  res.accuracy = double(correct) / double(data.count());
  return res;
}

TrainResult train(Network& net, const Dataset& train_data,
                  const Dataset& test_data, const TrainConfig& config) {
  if (train_data.count() < 1) throw io_error("train: empty training set");
  auto params = net.params();
  auto optimizer = make_optimizer(config.optimizer);

  const double mode_scale =
      config.mode == GradMode::exact ? 1.0 : config.probed_lr_scale;
  const int steps_per_epoch =
      (train_data.count() + config.batch - 1) / config.batch;
  const long total_steps = long(steps_per_epoch) * config.epochs;

  TrainResult result;
  StepContext ctx;
  ctx.master_seed = config.seed;
  ctx.mode = config.mode;
  ctx.training = true;
  long step = 0;

  std::vector<int> order(static_cast<size_t>(train_data.count()));
  for (int i = 0; i < train_data.count(); ++i) order[size_t(i)] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Deterministic Fisher-Yates shuffle per epoch.
    CounterRng shuffle_rng(config.seed,
                           derive_stream(0x73687566ULL, std::uint64_t(epoch)));
    for (int i = train_data.count() - 1; i > 0; --i) {
      const int j = int(shuffle_rng.next_below(std::uint64_t(i + 1)));
      std::swap(order[size_t(i)], order[size_t(j)]);
    }

    double epoch_loss = 0.0;
    int epoch_correct = 0;
    for (int start = 0; start < train_data.count(); start += config.batch) {
      const int bsz = std::min(config.batch, train_data.count() - start);
      const std::span<const int> idx(order.data() + start, size_t(bsz));
      const ChannelTensor x = make_batch(train_data, idx);
      const auto labels = batch_labels(train_data, idx);

      ctx.iteration = std::uint64_t(step);
      int correct = 0;
      const double loss = loss_and_grad(net, x, labels, ctx, &correct);
      epoch_loss += loss * bsz;
      epoch_correct += correct;

      double lr_scale = mode_scale;
      if (config.schedule == LrSchedule::cosine)
        lr_scale *= 0.5 * (1.0 + std::cos(std::numbers::pi * double(step) /
                                          double(total_steps)));
      optimizer->step(params, lr_scale);
      ++step;

      if (epoch == config.epochs - 1 && start + config.batch >= train_data.count()) {
        std::size_t conv_scalars = 0;
        for (auto* c : net.conv_layers())
          conv_scalars += c->stored_activation_scalars();
        result.conv_activation_scalars = conv_scalars;
      }
    }

    EpochLog row;
    row.epoch = epoch + 1;
    row.train_loss = epoch_loss / double(train_data.count());
    row.train_acc = double(epoch_correct) / double(train_data.count());
    if (test_data.count() > 0) {
      const EvalResult ev = evaluate(net, test_data, config.batch);
      row.test_loss = ev.loss;
      row.test_acc = ev.accuracy;
    }
    result.log.push_back(row);
  }

  if (!result.log.empty()) {
    const EvalResult tr = evaluate(net, train_data, config.batch);
    result.final_train_acc = tr.accuracy;
    result.final_test_acc = result.log.back().test_acc;
  }
  return result;
}

std::vector<GradNoiseRow> grad_noise_study(const NetworkSpec& spec,
                                           const Dataset& data,
                                           std::span<const GradMode> modes,
                                           int samples, int batch,
                                           std::uint64_t seed) {
  if (samples < 2) throw domain_error("grad_noise_study: need >= 2 samples");
  if (batch < 1 || batch > data.count())
    throw domain_error("grad_noise_study: batch must be in [1, dataset size]");

  // Same minibatch sequence for every mode so comparisons are paired.
  std::vector<std::vector<int>> batches;
  CounterRng pick(seed, 0x6e6f697365ULL);
  for (int s = 0; s < samples; ++s) {
    std::vector<int> idx(static_cast<size_t>(batch));
    for (int b = 0; b < batch; ++b)
      idx[size_t(b)] = int(pick.next_below(std::uint64_t(data.count())));
    batches.push_back(std::move(idx));
  }

  std::vector<GradNoiseRow> rows;
  for (const GradMode mode : modes) {
    Network net = Network::build(spec, seed);
    auto convs = net.conv_layers();
    // grads[layer][sample][coefficient]
    std::vector<std::vector<std::vector<double>>> grads(convs.size());

    StepContext ctx;
    ctx.master_seed = seed;
    ctx.mode = mode;
    ctx.training = true;
    for (int s = 0; s < samples; ++s) {
      ctx.iteration = std::uint64_t(s);
      const ChannelTensor x = make_batch(data, batches[size_t(s)]);
      const auto labels = batch_labels(data, batches[size_t(s)]);
      loss_and_grad(net, x, labels, ctx);
      for (size_t li = 0; li < convs.size(); ++li)
        grads[li].push_back(convs[li]->weight_grad().v);
    }

    for (size_t li = 0; li < convs.size(); ++li) {
      const size_t n_coeff = grads[li][0].size();
      std::vector<double> stds(n_coeff), mean_abs(n_coeff);
      std::vector<double> sample(static_cast<size_t>(samples));
      for (size_t k = 0; k < n_coeff; ++k) {
        for (int s = 0; s < samples; ++s) sample[size_t(s)] = grads[li][size_t(s)][k];
        stds[k] = stddev(sample);
        mean_abs[k] = std::abs(mean(sample));
      }
      GradNoiseRow row;
      row.layer = "conv_" + std::to_string(li);
      row.mode = grad_mode_name(mode);
      row.r = convs[li]->probed() ? convs[li]->probe_count() : 0;
      row.std_q25 = quantile(stds, 0.25);
      row.std_median = median(stds);
      row.std_q75 = quantile(stds, 0.75);
      row.mean_abs_median = median(mean_abs);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace probeconv::nn
