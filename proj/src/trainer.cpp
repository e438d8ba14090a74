#include "forgenet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "forgenet/log.hpp"
#include "forgenet/optim.hpp"

namespace forgenet {

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorKind::Config, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorKind::Config, "batch_size must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail(ErrorKind::Config, "lr must be finite and >= 0");
  if (!(early_stop_delta >= 0.0)) fail(ErrorKind::Config, "early_stop_delta must be >= 0");
}

const char* to_string(StopReason reason) noexcept {
  return reason == StopReason::EarlyStop ? "early_stop" : "epochs_exhausted";
}

bool should_stop(std::span<const double> val_history, double delta) {
  if (val_history.size() < 2) return false;
  const double last = val_history[val_history.size() - 1];
  const double previous = val_history[val_history.size() - 2];
  return std::fabs(last - previous) < delta;
}

double accuracy(const Network& net, const DatasetManifest& manifest, std::size_t batch_size) {
  if (manifest.empty()) fail(ErrorKind::Contract, "accuracy: empty manifest");
  const NetworkConfig& c = net.config();
  std::size_t correct = 0;
  for (const auto& indices : make_batches(manifest, batch_size, false, 0)) {
    const Batch batch = load_batch(manifest, indices, c.height, c.width);
    const std::vector<float> p = net.predict(batch.x);
    for (std::size_t i = 0; i < p.size(); ++i)
      correct += static_cast<int>(p[i] >= 0.5f) == batch.y[i];
  }
  return static_cast<double>(correct) / static_cast<double>(manifest.size());
}

namespace {

void check_images(const DatasetManifest& manifest, const NetworkConfig& c, const char* which) {
  if (manifest.empty()) fail(ErrorKind::Contract, std::string(which) + " manifest is empty");
  for (const ManifestRow& row : manifest.rows) {
    const auto [w, h] = read_ppm_size(manifest.resolve(row));
    if (w != c.width || h != c.height)
      fail(ErrorKind::Shape, std::string(which) + " frame " + row.path + " is " +
                                 std::to_string(w) + "x" + std::to_string(h) +
                                 ", network expects " + std::to_string(c.width) + "x" +
                                 std::to_string(c.height));
  }
}

}  // namespace

std::filesystem::path checkpoint_path_for(const std::filesystem::path& base, std::uint32_t epoch) {
  char suffix[32];
  std::snprintf(suffix, sizeof suffix, ".epoch%02u", epoch);
  std::filesystem::path out = base.parent_path() / (base.stem().string() + suffix);
  out += base.extension();
  return out;
}

TrainResult train(Network& net, const DatasetManifest& train_set, const DatasetManifest& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const NetworkConfig& nc = net.config();
  check_images(train_set, nc, "train");
  check_images(val_set, nc, "validation");

  AdamState<float> adam;
  adam.lr = config.lr;
  TrainResult result;
  std::vector<double> val_history;

  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    // One permutation per epoch, a function of (seed, epoch) only.
    const auto batches =
        make_batches(train_set, config.batch_size, true, config.seed + 0x9E3779B97F4A7C15ull * epoch);

    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0;
    for (const auto& indices : batches) {
      const Batch batch = load_batch(train_set, indices, nc.height, nc.width);
      const ForwardResult<float> fwd = net.forward(batch.x, Mode::Training);
      const NetworkGradients<float> grads = net.backward(fwd.cache, batch.y);
      const auto views = grads.views();
      const auto params = net.trainable_parameters();
      adam_step<float>(params, views, adam);

      loss_sum += grads.loss * static_cast<double>(indices.size());
      for (std::size_t i = 0; i < indices.size(); ++i)
        correct += static_cast<int>(fwd.probabilities[i] >= 0.5f) == batch.y[i];
      seen += indices.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
    rec.val_acc = accuracy(net, val_set, config.batch_size);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    rec.wall_time = config.fixed_clock ? 0.0 : elapsed.count();
    result.epochs.push_back(rec);
    log_message(LogLevel::Info, "epoch " + std::to_string(epoch) + ": loss " +
                                    std::to_string(rec.train_loss) + " train_acc " +
                                    std::to_string(rec.train_acc) + " val_acc " +
                                    std::to_string(rec.val_acc));

    if (config.checkpoint_path) save_weights(net, checkpoint_path_for(*config.checkpoint_path, epoch));
    if (on_epoch) on_epoch(rec);

    val_history.push_back(rec.val_acc);
    if (epoch < config.epochs && should_stop(val_history, config.early_stop_delta)) {
      result.stop_reason = StopReason::EarlyStop;
      break;
    }
  }
  return result;
}

std::string format_metrics_csv(const std::vector<EpochRecord>& records) {
  std::string out = std::string(kMetricsHeader) + "\n";
  char line[160];
  for (const EpochRecord& r : records) {
    std::snprintf(line, sizeof line, "%u,%.6f,%.6f,%.6f,%.3f\n", r.epoch, r.train_loss,
                  r.train_acc, r.val_acc, r.wall_time);
    out += line;
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << format_metrics_csv(records);
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace forgenet
