#include "forgenet/ablation.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "forgenet/log.hpp"

namespace forgenet {

const char* to_string(AblationAxis axis) noexcept {
  switch (axis) {
    case AblationAxis::Layers: return "layers";
    case AblationAxis::BatchSize: return "batch";
    case AblationAxis::Filters: return "filters";
  }
  return "unknown";
}

std::optional<AblationAxis> parse_axis(std::string_view name) noexcept {
  if (name == "layers") return AblationAxis::Layers;
  if (name == "batch" || name == "batch_size") return AblationAxis::BatchSize;
  if (name == "filters") return AblationAxis::Filters;
  return std::nullopt;
}

void AblationSpec::validate() const {
  if (values.empty()) fail(ErrorKind::Config, "ablation: no values to sweep");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] <= values[i - 1])
      fail(ErrorKind::Config, "ablation: values must be strictly increasing (" +
                                  std::to_string(values[i - 1]) + " then " +
                                  std::to_string(values[i]) + ")");
  if (epochs && *epochs < 1) fail(ErrorKind::Config, "ablation: epochs must be >= 1");
}

std::uint32_t AblationSpec::effective_epochs() const {
  if (epochs) return *epochs;
  return axis == AblationAxis::Layers ? training.epochs : 1;
}

namespace {

void apply_value(AblationAxis axis, std::uint32_t value, NetworkConfig& net, TrainConfig& train) {
  switch (axis) {
    case AblationAxis::Layers: net.conv_layers = value; break;
    case AblationAxis::BatchSize: train.batch_size = value; break;
    case AblationAxis::Filters: net.filters = value; break;
  }
}

}  // namespace

std::vector<AblationRow> run_ablation(const AblationSpec& spec, const DatasetManifest& train_set,
                                      const DatasetManifest& val_set,
                                      const DatasetManifest& test_set,
                                      const AblationProgress& on_row) {
  spec.validate();
  if (train_set.empty() || val_set.empty() || test_set.empty())
    fail(ErrorKind::Contract, "ablation: train, validation and test manifests must be non-empty");

  // Every point is validated up front so a bad value fails before any run.
  for (std::uint32_t value : spec.values) {
    NetworkConfig net = spec.network;
    TrainConfig train = spec.training;
    apply_value(spec.axis, value, net, train);
    train.epochs = spec.effective_epochs();
    try {
      net.validate();
      train.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Config, std::string("ablation ") + to_string(spec.axis) + "=" +
                                  std::to_string(value) + ": " + e.what());
    }
  }

  std::vector<AblationRow> rows;
  for (std::uint32_t value : spec.values) {
    NetworkConfig net_config = spec.network;
    TrainConfig train_config = spec.training;
    apply_value(spec.axis, value, net_config, train_config);
    train_config.epochs = spec.effective_epochs();
    train_config.checkpoint_path.reset();

    const auto start = std::chrono::steady_clock::now();
    Network net = Network::build(net_config);
    const TrainResult result = train(net, train_set, val_set, train_config);
    AblationRow row;
    row.value = value;
    row.train_acc = result.epochs.back().train_acc;
    row.val_acc = result.epochs.back().val_acc;
    row.test_acc = accuracy(net, test_set, train_config.batch_size);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    row.runtime = train_config.fixed_clock ? 0.0 : elapsed.count();
    log_message(LogLevel::Info, std::string("ablation ") + to_string(spec.axis) + "=" +
                                    std::to_string(value) + ": test_acc " +
                                    std::to_string(row.test_acc));
    if (on_row) on_row(row);
    rows.push_back(row);
  }
  return rows;
}

std::string format_ablation_csv(AblationAxis axis, const std::vector<AblationRow>& rows) {
  std::string out = std::string(kAblationHeader) + "\n";
  char line[192];
  for (const AblationRow& r : rows) {
    std::snprintf(line, sizeof line, "%s,%u,%.6f,%.6f,%.6f,%.3f\n", to_string(axis), r.value,
                  r.train_acc, r.val_acc, r.test_acc, r.runtime);
    out += line;
  }
  return out;
}

void write_ablation_csv(const std::filesystem::path& path, AblationAxis axis,
                        const std::vector<AblationRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << format_ablation_csv(axis, rows);
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace forgenet
