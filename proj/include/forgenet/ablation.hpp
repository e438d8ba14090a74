#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forgenet/data.hpp"
#include "forgenet/model.hpp"
#include "forgenet/trainer.hpp"

namespace forgenet {

enum class AblationAxis { Layers, BatchSize, Filters };

const char* to_string(AblationAxis axis) noexcept;
// Accepts "layers", "batch" / "batch_size", "filters".
std::optional<AblationAxis> parse_axis(std::string_view name) noexcept;

/// One sweep. Only the swept field of `network` / `training` changes
/// between points; seeds and data order stay fixed.
struct AblationSpec {
  AblationAxis axis = AblationAxis::Layers;
  std::vector<std::uint32_t> values;
  // Epochs per point. Unset means: full training.epochs for the layer
  // axis, one epoch for the batch and filter axes.
  std::optional<std::uint32_t> epochs;
  NetworkConfig network;
  TrainConfig training;

  void validate() const;
  std::uint32_t effective_epochs() const;
};

struct AblationRow {
  std::uint32_t value = 0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double runtime = 0.0;  // seconds

  friend bool operator==(const AblationRow&, const AblationRow&) = default;
};

using AblationProgress = std::function<void(const AblationRow&)>;

std::vector<AblationRow> run_ablation(const AblationSpec& spec, const DatasetManifest& train_set,
                                      const DatasetManifest& val_set,
                                      const DatasetManifest& test_set,
                                      const AblationProgress& on_row = {});

inline constexpr const char* kAblationHeader = "axis,value,train_acc,val_acc,test_acc,runtime_s";
std::string format_ablation_csv(AblationAxis axis, const std::vector<AblationRow>& rows);
void write_ablation_csv(const std::filesystem::path& path, AblationAxis axis,
                        const std::vector<AblationRow>& rows);

}  // namespace forgenet
