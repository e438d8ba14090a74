#include "forgenet/forgenet.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include "forgenet/ablation.hpp"
#include "forgenet/evaluator.hpp"
#include "forgenet/parallel.hpp"
#include "forgenet/trainer.hpp"

#ifndef FORGENET_VERSION_STRING
#define FORGENET_VERSION_STRING "0.0.0"
#endif

struct fgn_network {
  forgenet::Network net;
};

struct fgn_manifest {
  forgenet::DatasetManifest manifest;
};

struct fgn_training_run {
  forgenet::TrainResult result;
};

struct fgn_predictions {
  std::vector<forgenet::PredictionRecord> records;
};

struct fgn_evaluation {
  forgenet::EvaluationReport report;
  std::string table;
  std::string jsonl;
};

struct fgn_ablation_result {
  forgenet::AblationAxis axis;
  std::vector<forgenet::AblationRow> rows;
};

namespace {

thread_local std::string t_last_error;

fgn_status to_status(forgenet::ErrorKind kind) {
  using forgenet::ErrorKind;
  switch (kind) {
    case ErrorKind::Shape: return FGN_ERR_SHAPE;
    case ErrorKind::Config: return FGN_ERR_CONFIG;
    case ErrorKind::Format: return FGN_ERR_FORMAT;
    case ErrorKind::Parse: return FGN_ERR_PARSE;
    case ErrorKind::Decode: return FGN_ERR_DECODE;
    case ErrorKind::Io: return FGN_ERR_IO;
    case ErrorKind::Contract: return FGN_ERR_CONTRACT;
    case ErrorKind::DegenerateBatch: return FGN_ERR_DEGENERATE_BATCH;
    case ErrorKind::PoisonedGradient: return FGN_ERR_POISONED_GRADIENT;
  }
  return FGN_ERR_INTERNAL;
}

fgn_status invalid(const char* what) {
  t_last_error = what;
  return FGN_ERR_INVALID_ARGUMENT;
}

// Runs body and converts any exception into a status + thread-local message.
template <typename F>
fgn_status guarded(F&& body) {
  try {
    t_last_error.clear();
    body();
    return FGN_OK;
  } catch (const forgenet::Error& e) {
    t_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return FGN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return FGN_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown exception";
    return FGN_ERR_INTERNAL;
  }
}

forgenet::NetworkConfig from_c(const fgn_network_config& c) {
  forgenet::NetworkConfig out;
  out.conv_layers = c.conv_layers;
  out.filters = c.filters;
  out.height = c.height;
  out.width = c.width;
  out.bn_epsilon = c.bn_epsilon;
  out.bn_momentum = c.bn_momentum;
  out.seed = c.seed;
  return out;
}

fgn_network_config to_c(const forgenet::NetworkConfig& c) {
  return fgn_network_config{c.conv_layers, c.filters,    c.height, c.width,
                            c.bn_epsilon,  c.bn_momentum, c.seed};
}

forgenet::TrainConfig from_c(const fgn_train_options& o) {
  forgenet::TrainConfig out;
  out.epochs = o.epochs;
  out.batch_size = o.batch_size;
  out.lr = o.lr;
  out.early_stop_delta = o.early_stop_delta;
  out.seed = o.seed;
  if (o.checkpoint_path != nullptr && o.checkpoint_path[0] != '\0')
    out.checkpoint_path = std::filesystem::path(o.checkpoint_path);
  out.fixed_clock = o.fixed_clock != 0;
  return out;
}

}  // namespace

extern "C" {

const char* fgn_version(void) { return FORGENET_VERSION_STRING; }

const char* fgn_status_name(fgn_status status) {
  switch (status) {
    case FGN_OK: return "ok";
    case FGN_ERR_SHAPE: return "shape error";
    case FGN_ERR_CONFIG: return "config error";
    case FGN_ERR_FORMAT: return "format error";
    case FGN_ERR_PARSE: return "parse error";
    case FGN_ERR_DECODE: return "decode error";
    case FGN_ERR_IO: return "I/O error";
    case FGN_ERR_CONTRACT: return "contract error";
    case FGN_ERR_DEGENERATE_BATCH: return "degenerate batch";
    case FGN_ERR_POISONED_GRADIENT: return "poisoned gradient";
    case FGN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case FGN_ERR_OUT_OF_RANGE: return "out of range";
    case FGN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* fgn_last_error(void) { return t_last_error.c_str(); }

void fgn_set_threads(int threads) { forgenet::set_thread_count(threads); }

void fgn_network_config_default(fgn_network_config* config) {
  if (config != nullptr) *config = to_c(forgenet::NetworkConfig{});
}

fgn_status fgn_count_parameters(const fgn_network_config* config, uint64_t* count) {
  if (config == nullptr || count == nullptr) return invalid("null argument");
  return guarded([&] { *count = forgenet::count_parameters(from_c(*config)); });
}

fgn_status fgn_network_create(const fgn_network_config* config, fgn_network** out) {
  if (config == nullptr || out == nullptr) return invalid("null argument");
  *out = nullptr;
  return guarded([&] { *out = new fgn_network{forgenet::Network::build(from_c(*config))}; });
}

fgn_status fgn_network_load(const char* path, const fgn_network_config* expected,
                            fgn_network** out) {
  if (path == nullptr || out == nullptr) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    if (expected != nullptr)
      *out = new fgn_network{forgenet::load_weights(path, from_c(*expected))};
    else
      *out = new fgn_network{forgenet::load_weights(std::filesystem::path(path))};
  });
}

fgn_status fgn_network_save(const fgn_network* net, const char* path) {
  if (net == nullptr || path == nullptr) return invalid("null argument");
  return guarded([&] { forgenet::save_weights(net->net, std::filesystem::path(path)); });
}

fgn_status fgn_network_get_config(const fgn_network* net, fgn_network_config* config) {
  if (net == nullptr || config == nullptr) return invalid("null argument");
  *config = to_c(net->net.config());
  return FGN_OK;
}

fgn_status fgn_network_parameter_count(const fgn_network* net, uint64_t* count) {
  if (net == nullptr || count == nullptr) return invalid("null argument");
  *count = net->net.stored_parameter_count();
  return FGN_OK;
}

fgn_status fgn_network_predict(const fgn_network* net, const float* pixels, size_t count,
                               float* probabilities) {
  if (net == nullptr || pixels == nullptr || probabilities == nullptr)
    return invalid("null argument");
  if (count == 0) return invalid("count must be >= 1");
  return guarded([&] {
    const forgenet::Shape4 shape = net->net.config().input_shape(count);
    forgenet::Tensor4 x(shape, std::vector<float>(pixels, pixels + shape.count()));
    const std::vector<float> p = net->net.predict(x);
    std::memcpy(probabilities, p.data(), p.size() * sizeof(float));
  });
}

void fgn_network_destroy(fgn_network* net) { delete net; }

fgn_status fgn_manifest_load(const char* path, fgn_split split, fgn_manifest** out) {
  if (path == nullptr || out == nullptr) return invalid("null argument");
  if (split < FGN_SPLIT_TRAIN || split > FGN_SPLIT_TEST) return invalid("bad split");
  *out = nullptr;
  return guarded([&] {
    *out = new fgn_manifest{forgenet::load_manifest(path, static_cast<forgenet::Split>(split))};
  });
}

size_t fgn_manifest_size(const fgn_manifest* manifest) {
  return manifest == nullptr ? 0 : manifest->manifest.size();
}

fgn_status fgn_manifest_class_counts(const fgn_manifest* manifest, uint64_t* originals,
                                     uint64_t* fakes) {
  if (manifest == nullptr) return invalid("null manifest");
  uint64_t o = 0, f = 0;
  for (const auto& row : manifest->manifest.rows)
    (row.label == forgenet::Label::Original ? o : f) += 1;
  if (originals != nullptr) *originals = o;
  if (fakes != nullptr) *fakes = f;
  return FGN_OK;
}

void fgn_manifest_destroy(fgn_manifest* manifest) { delete manifest; }

fgn_status fgn_generate_synthetic(uint32_t videos, uint32_t frames_per_video, uint32_t size,
                                  uint64_t seed, const char* destination, fgn_manifest** out) {
  if (destination == nullptr) return invalid("null destination");
  if (out != nullptr) *out = nullptr;
  return guarded([&] {
    forgenet::DatasetManifest m =
        forgenet::generate_synthetic(videos, frames_per_video, size, seed, destination);
    if (out != nullptr) *out = new fgn_manifest{std::move(m)};
  });
}

void fgn_train_options_default(fgn_train_options* options) {
  if (options == nullptr) return;
  const forgenet::TrainConfig d;
  *options = fgn_train_options{d.epochs, d.batch_size, d.lr,    d.early_stop_delta, d.seed,
                               nullptr,  0,            nullptr, nullptr};
}

fgn_status fgn_train(fgn_network* net, const fgn_manifest* train_set, const fgn_manifest* val_set,
                     const fgn_train_options* options, fgn_training_run** out) {
  if (net == nullptr || train_set == nullptr || val_set == nullptr || options == nullptr ||
      out == nullptr)
    return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    forgenet::EpochCallback on_epoch;
    if (options->on_epoch != nullptr)
      on_epoch = [cb = options->on_epoch, user = options->user_data](const forgenet::EpochRecord& e) {
        const fgn_epoch_record rec{e.epoch, e.train_loss, e.train_acc, e.val_acc, e.wall_time};
        cb(&rec, user);
      };
    forgenet::TrainResult r = forgenet::train(net->net, train_set->manifest, val_set->manifest,
                                              from_c(*options), on_epoch);
    *out = new fgn_training_run{std::move(r)};
  });
}

size_t fgn_training_run_epochs(const fgn_training_run* run) {
  return run == nullptr ? 0 : run->result.epochs.size();
}

fgn_status fgn_training_run_epoch(const fgn_training_run* run, size_t index,
                                  fgn_epoch_record* record) {
  if (run == nullptr || record == nullptr) return invalid("null argument");
  if (index >= run->result.epochs.size()) {
    t_last_error = "epoch index out of range";
    return FGN_ERR_OUT_OF_RANGE;
  }
  const auto& e = run->result.epochs[index];
  *record = fgn_epoch_record{e.epoch, e.train_loss, e.train_acc, e.val_acc, e.wall_time};
  return FGN_OK;
}

const char* fgn_training_run_stop_reason(const fgn_training_run* run) {
  return run == nullptr ? "" : forgenet::to_string(run->result.stop_reason);
}

fgn_status fgn_training_run_write_metrics(const fgn_training_run* run, const char* path) {
  if (run == nullptr || path == nullptr) return invalid("null argument");
  return guarded([&] { forgenet::write_metrics_csv(path, run->result.epochs); });
}

void fgn_training_run_destroy(fgn_training_run* run) { delete run; }

fgn_status fgn_predict_manifest(const fgn_network* net, const fgn_manifest* manifest,
                                fgn_predictions** out) {
  if (net == nullptr || manifest == nullptr || out == nullptr) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new fgn_predictions{forgenet::predict_manifest(net->net, manifest->manifest)};
  });
}

fgn_status fgn_predictions_load(const char* path, fgn_predictions** out) {
  if (path == nullptr || out == nullptr) return invalid("null argument");
  *out = nullptr;
  return guarded([&] { *out = new fgn_predictions{forgenet::read_predictions(path)}; });
}

fgn_status fgn_predictions_save(const fgn_predictions* predictions, const char* path) {
  if (predictions == nullptr || path == nullptr) return invalid("null argument");
  return guarded([&] { forgenet::write_predictions(path, predictions->records); });
}

size_t fgn_predictions_size(const fgn_predictions* predictions) {
  return predictions == nullptr ? 0 : predictions->records.size();
}

void fgn_predictions_destroy(fgn_predictions* predictions) { delete predictions; }

fgn_status fgn_evaluate(const fgn_predictions* predictions, fgn_eval_level level,
                        fgn_evaluation** out) {
  if (predictions == nullptr || out == nullptr) return invalid("null argument");
  if (level != FGN_LEVEL_FRAME && level != FGN_LEVEL_VIDEO) return invalid("bad level");
  *out = nullptr;
  return guarded([&] {
    auto* e = new fgn_evaluation;
    try {
      e->report = forgenet::evaluate(predictions->records, level == FGN_LEVEL_FRAME
                                                               ? forgenet::EvalLevel::Frame
                                                               : forgenet::EvalLevel::Video);
      e->table = forgenet::format_report_table(e->report);
      e->jsonl = forgenet::format_report_jsonl(e->report);
    } catch (...) {
      delete e;
      throw;
    }
    *out = e;
  });
}

fgn_status fgn_evaluation_accuracy(const fgn_evaluation* eval, double* accuracy) {
  if (eval == nullptr || accuracy == nullptr) return invalid("null argument");
  *accuracy = eval->report.accuracy;
  return FGN_OK;
}

fgn_status fgn_evaluation_confusion(const fgn_evaluation* eval, fgn_confusion* confusion) {
  if (eval == nullptr || confusion == nullptr) return invalid("null argument");
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      confusion->counts[r][c] = eval->report.confusion.counts[r][c];
      confusion->rates[r][c] = eval->report.confusion.rates[r][c];
    }
  return FGN_OK;
}

size_t fgn_evaluation_verdicts(const fgn_evaluation* eval) {
  return eval == nullptr ? 0 : eval->report.verdicts.size();
}

fgn_status fgn_evaluation_verdict(const fgn_evaluation* eval, size_t index,
                                  fgn_video_verdict* verdict) {
  if (eval == nullptr || verdict == nullptr) return invalid("null argument");
  if (index >= eval->report.verdicts.size()) {
    t_last_error = "verdict index out of range";
    return FGN_ERR_OUT_OF_RANGE;
  }
  const auto& v = eval->report.verdicts[index];
  *verdict = fgn_video_verdict{v.video_id.c_str(), static_cast<int>(v.truth),
                               static_cast<int>(v.predicted), v.frames_original, v.frames_fake};
  return FGN_OK;
}

const char* fgn_evaluation_report(const fgn_evaluation* eval, fgn_report_format format) {
  if (eval == nullptr) return "";
  return format == FGN_REPORT_JSONL ? eval->jsonl.c_str() : eval->table.c_str();
}

void fgn_evaluation_destroy(fgn_evaluation* eval) { delete eval; }

fgn_status fgn_probability_histogram(const fgn_predictions* predictions, const char* video_id,
                                     size_t bins, uint64_t* counts) {
  if (predictions == nullptr || video_id == nullptr || counts == nullptr)
    return invalid("null argument");
  return guarded([&] {
    const auto records = forgenet::records_for_video(predictions->records, video_id);
    const auto h = forgenet::probability_histogram(records, bins);
    std::copy(h.begin(), h.end(), counts);
  });
}

fgn_status fgn_write_histogram_csv(const fgn_predictions* predictions, const char* video_id,
                                   size_t bins, const char* path) {
  if (predictions == nullptr || video_id == nullptr || path == nullptr)
    return invalid("null argument");
  return guarded([&] {
    const auto records = forgenet::records_for_video(predictions->records, video_id);
    if (records.empty())
      forgenet::fail(forgenet::ErrorKind::Contract,
                     std::string("no frames for video '") + video_id + "'");
    const auto h = forgenet::probability_histogram(records, bins);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) forgenet::fail(forgenet::ErrorKind::Io, std::string("cannot write ") + path);
    out << forgenet::format_histogram_csv(h);
    if (!out) forgenet::fail(forgenet::ErrorKind::Io, std::string("failed writing ") + path);
  });
}

fgn_status fgn_run_ablation(const fgn_ablation_options* options, const fgn_manifest* train_set,
                            const fgn_manifest* val_set, const fgn_manifest* test_set,
                            fgn_ablation_result** out) {
  if (options == nullptr || train_set == nullptr || val_set == nullptr || test_set == nullptr ||
      out == nullptr)
    return invalid("null argument");
  if (options->values == nullptr && options->value_count > 0) return invalid("null values");
  if (options->axis < FGN_AXIS_LAYERS || options->axis > FGN_AXIS_FILTERS)
    return invalid("bad axis");
  *out = nullptr;
  return guarded([&] {
    forgenet::AblationSpec spec;
    spec.axis = static_cast<forgenet::AblationAxis>(options->axis);
    spec.values.assign(options->values, options->values + options->value_count);
    if (options->epochs > 0) spec.epochs = options->epochs;
    spec.network = from_c(options->network);
    spec.training = from_c(options->training);
    auto rows = forgenet::run_ablation(spec, train_set->manifest, val_set->manifest,
                                       test_set->manifest);
    *out = new fgn_ablation_result{spec.axis, std::move(rows)};
  });
}

size_t fgn_ablation_result_size(const fgn_ablation_result* result) {
  return result == nullptr ? 0 : result->rows.size();
}

fgn_status fgn_ablation_result_row(const fgn_ablation_result* result, size_t index,
                                   fgn_ablation_row* row) {
  if (result == nullptr || row == nullptr) return invalid("null argument");
  if (index >= result->rows.size()) {
    t_last_error = "row index out of range";
    return FGN_ERR_OUT_OF_RANGE;
  }
  const auto& r = result->rows[index];
  *row = fgn_ablation_row{r.value, r.train_acc, r.val_acc, r.test_acc, r.runtime};
  return FGN_OK;
}

fgn_status fgn_ablation_result_write_csv(const fgn_ablation_result* result, const char* path) {
  if (result == nullptr || path == nullptr) return invalid("null argument");
  return guarded([&] { forgenet::write_ablation_csv(path, result->axis, result->rows); });
}

void fgn_ablation_result_destroy(fgn_ablation_result* result) { delete result; }

}  // extern "C"
