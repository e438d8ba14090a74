#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forgenet/data.hpp"
#include "forgenet/model.hpp"

namespace forgenet {

struct TrainConfig {
  std::uint32_t epochs = 10;
  std::uint32_t batch_size = 128;
  double lr = 0.001;
  double early_stop_delta = 0.01;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> checkpoint_path;
  // Report every wall-clock duration as 0 (byte-reproducible logs).
  bool fixed_clock = false;

  void validate() const;
};

struct EpochRecord {
  std::uint32_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;  // running accuracy of the training-mode passes
  double val_acc = 0.0;
  double wall_time = 0.0;  // seconds

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

enum class StopReason { EpochsExhausted, EarlyStop };

const char* to_string(StopReason reason) noexcept;

struct TrainResult {
  std::vector<EpochRecord> epochs;
  StopReason stop_reason = StopReason::EpochsExhausted;
};

// True iff there are at least two entries and the last two differ by
// strictly less than delta.
bool should_stop(std::span<const double> val_history, double delta);

// Inference-mode accuracy over a manifest with the 0.5 threshold.
double accuracy(const Network& net, const DatasetManifest& manifest,
                std::size_t batch_size = 128);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains in place. Every image in both manifests is checked against the
// network input shape before the first update.
TrainResult train(Network& net, const DatasetManifest& train_set, const DatasetManifest& val_set,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

std::filesystem::path checkpoint_path_for(const std::filesystem::path& base, std::uint32_t epoch);

inline constexpr const char* kMetricsHeader = "epoch,train_loss,train_acc,val_acc,wall_time";
std::string format_metrics_csv(const std::vector<EpochRecord>& records);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& records);

}  // namespace forgenet
