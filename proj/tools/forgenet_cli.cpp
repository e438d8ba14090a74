#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "forgenet/forgenet.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Carries an exit code out of a command body.
struct CommandError : std::runtime_error {
  int code;
  CommandError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

int exit_code_for(fgn_status s) {
  switch (s) {
    case FGN_OK: return kExitOk;
    case FGN_ERR_CONFIG:
    case FGN_ERR_INVALID_ARGUMENT: return kExitUsage;
    default: return kExitRuntime;
  }
}

void check(fgn_status s, const std::string& what) {
  if (s == FGN_OK) return;
  throw CommandError(exit_code_for(s),
                     what + ": " + fgn_status_name(s) + ": " + fgn_last_error());
}

// Minimal owning wrapper for the C handles.
template <typename T, void (*Destroy)(T*)>
class Handle {
 public:
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (ptr_ != nullptr) Destroy(ptr_);
  }
  T** out() { return &ptr_; }
  T* get() const { return ptr_; }

 private:
  T* ptr_ = nullptr;
};

using NetworkHandle = Handle<fgn_network, fgn_network_destroy>;
using ManifestHandle = Handle<fgn_manifest, fgn_manifest_destroy>;
using RunHandle = Handle<fgn_training_run, fgn_training_run_destroy>;
using PredictionsHandle = Handle<fgn_predictions, fgn_predictions_destroy>;
using EvaluationHandle = Handle<fgn_evaluation, fgn_evaluation_destroy>;
using AblationHandle = Handle<fgn_ablation_result, fgn_ablation_result_destroy>;

struct CommonOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  bool reproducible = false;
  std::string out;
};

struct NetworkOptions {
  std::uint32_t layers = 4;
  std::uint32_t filters = 4;
  std::uint32_t size = 128;
  double bn_momentum = 0.99;
  double bn_epsilon = 1e-3;
};

struct TrainingOptions {
  std::uint32_t epochs = 10;
  std::uint32_t batch = 128;
  double lr = 0.001;
  double early_stop = 0.01;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_out) {
  cmd->add_option("--seed", o.seed, "Seed for every random draw")->capture_default_str();
  cmd->add_option("--threads", o.threads, "Worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--reproducible", o.reproducible,
                "Zero durations; timestamps from SOURCE_DATE_EPOCH");
  auto* out = cmd->add_option("--out", o.out, "Output directory");
  if (needs_out) out->required();
}

void add_network(CLI::App* cmd, NetworkOptions& o) {
  cmd->add_option("--layers", o.layers, "Convolutional blocks")->capture_default_str();
  cmd->add_option("--filters", o.filters, "Filters per convolution")->capture_default_str();
  cmd->add_option("--size", o.size, "Input height and width")->capture_default_str();
  cmd->add_option("--bn-momentum", o.bn_momentum, "Batchnorm moving-average momentum")
      ->capture_default_str();
  cmd->add_option("--bn-epsilon", o.bn_epsilon, "Batchnorm epsilon")->capture_default_str();
}

void add_training(CLI::App* cmd, TrainingOptions& o, bool with_epochs) {
  if (with_epochs) cmd->add_option("--epochs", o.epochs, "Maximum epochs")->capture_default_str();
  cmd->add_option("--batch", o.batch, "Mini-batch size")->capture_default_str();
  cmd->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--early-stop", o.early_stop, "Early-stop delta on validation accuracy")
      ->capture_default_str();
}

fgn_network_config network_config(const NetworkOptions& o, std::uint64_t seed) {
  fgn_network_config c;
  fgn_network_config_default(&c);
  c.conv_layers = o.layers;
  c.filters = o.filters;
  c.height = o.size;
  c.width = o.size;
  c.bn_momentum = o.bn_momentum;
  c.bn_epsilon = o.bn_epsilon;
  c.seed = seed;
  return c;
}

fgn_train_options train_options(const TrainingOptions& o, const CommonOptions& common) {
  fgn_train_options t;
  fgn_train_options_default(&t);
  t.epochs = o.epochs;
  t.batch_size = o.batch;
  t.lr = o.lr;
  t.early_stop_delta = o.early_stop;
  t.seed = common.seed;
  t.fixed_clock = common.reproducible ? 1 : 0;
  return t;
}

json network_json(const fgn_network_config& c) {
  return json{{"conv_layers", c.conv_layers}, {"filters", c.filters},
              {"height", c.height},           {"width", c.width},
              {"bn_epsilon", c.bn_epsilon},   {"bn_momentum", c.bn_momentum}};
}

json training_json(const fgn_train_options& t) {
  return json{{"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"lr", t.lr},
              {"early_stop_delta", t.early_stop_delta}};
}

std::time_t now_or_fixed(bool reproducible) {
  if (!reproducible) return std::time(nullptr);
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (env == nullptr || *env == '\0') return 0;
  try {
    return static_cast<std::time_t>(std::stoll(env));
  } catch (const std::exception&) {
    throw CommandError(kExitUsage, std::string("SOURCE_DATE_EPOCH is not an integer: ") + env);
  }
}

std::string iso8601(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Creates the output directory and proves it is writable before any work.
fs::path prepare_out(const std::string& dir) {
  const fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out))
    throw CommandError(kExitUsage, "cannot create output directory " + dir +
                                       (ec ? ": " + ec.message() : ""));
  const fs::path probe = out / ".forgenet-write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw CommandError(kExitUsage, "output directory is not writable: " + dir);
  }
  fs::remove(probe, ec);
  return out;
}

class RunRecord {
 public:
  RunRecord(std::string command, const CommonOptions& common)
      : common_(common), started_(now_or_fixed(common.reproducible)) {
    doc_["command"] = std::move(command);
    doc_["version"] = fgn_version();
    doc_["seed"] = common.seed;
    doc_["threads"] = common.threads;
    doc_["config"] = json::object();
    doc_["outputs"] = json::array();
  }

  json& config() { return doc_["config"]; }
  void output(const fs::path& p) { doc_["outputs"].push_back(p.filename().string()); }

  void write(const fs::path& dir) {
    doc_["started_at"] = iso8601(started_);
    doc_["finished_at"] = iso8601(now_or_fixed(common_.reproducible));
    const fs::path path = dir / "run.json";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << doc_.dump(2) << "\n";
    if (!f) throw CommandError(kExitRuntime, "failed writing " + path.string());
  }

 private:
  const CommonOptions& common_;
  std::time_t started_;
  json doc_;
};

void load_manifest(ManifestHandle& m, const std::string& path, fgn_split split) {
  check(fgn_manifest_load(path.c_str(), split, m.out()), "loading manifest " + path);
}

// ---- gen-synth ----------------------------------------------------------

struct GenSynthOptions {
  CommonOptions common;
  std::uint32_t videos = 10;
  std::uint32_t frames = 20;
  std::uint32_t size = 32;
};

int cmd_gen_synth(const GenSynthOptions& o) {
  const fs::path out = prepare_out(o.common.out);
  RunRecord run("gen-synth", o.common);
  run.config() = json{{"videos", o.videos}, {"frames", o.frames}, {"size", o.size}};

  ManifestHandle m;
  check(fgn_generate_synthetic(o.videos, o.frames, o.size, o.common.seed, out.string().c_str(),
                               m.out()),
        "generating synthetic data");
  std::uint64_t originals = 0, fakes = 0;
  check(fgn_manifest_class_counts(m.get(), &originals, &fakes), "counting classes");
  run.output(out / "manifest.csv");
  run.write(out);
  std::printf("videos %u, frames %zu (original %llu, fake %llu) -> %s\n", o.videos,
              fgn_manifest_size(m.get()), static_cast<unsigned long long>(originals),
              static_cast<unsigned long long>(fakes), (out / "manifest.csv").string().c_str());
  return kExitOk;
}

// ---- train --------------------------------------------------------------

struct TrainCmdOptions {
  CommonOptions common;
  NetworkOptions network;
  TrainingOptions training;
  std::string manifest;
  std::string val_manifest;
  bool checkpoints = false;
  bool print_params = false;
};

void print_epoch(const fgn_epoch_record* r, void*) {
  std::printf("epoch %2u  loss %.4f  train_acc %.4f  val_acc %.4f  %.2fs\n", r->epoch,
              r->train_loss, r->train_acc, r->val_acc, r->wall_time);
  std::fflush(stdout);
}

int cmd_train(const TrainCmdOptions& o) {
  const fgn_network_config nc = network_config(o.network, o.common.seed);
  if (o.print_params) {
    std::uint64_t count = 0;
    check(fgn_count_parameters(&nc, &count), "counting parameters");
    std::printf("%llu\n", static_cast<unsigned long long>(count));
    return kExitOk;
  }
  if (o.common.out.empty()) throw CommandError(kExitUsage, "--out is required");
  if (o.manifest.empty() || o.val_manifest.empty())
    throw CommandError(kExitUsage, "--manifest and --val-manifest are required");

  NetworkHandle net;
  check(fgn_network_create(&nc, net.out()), "building network");
  fgn_train_options to = train_options(o.training, o.common);

  const fs::path out = prepare_out(o.common.out);
  RunRecord run("train", o.common);
  run.config() = json{{"network", network_json(nc)},
                      {"training", training_json(to)},
                      {"manifest", o.manifest},
                      {"val_manifest", o.val_manifest}};

  ManifestHandle train_set, val_set;
  load_manifest(train_set, o.manifest, FGN_SPLIT_TRAIN);
  load_manifest(val_set, o.val_manifest, FGN_SPLIT_VAL);

  std::string checkpoint_base;
  if (o.checkpoints) {
    fs::create_directories(out / "checkpoints");
    checkpoint_base = (out / "checkpoints" / "weights.fgn").string();
    to.checkpoint_path = checkpoint_base.c_str();
  }
  to.on_epoch = print_epoch;

  RunHandle result;
  check(fgn_train(net.get(), train_set.get(), val_set.get(), &to, result.out()), "training");

  const fs::path weights = out / "weights.fgn";
  const fs::path metrics = out / "metrics.csv";
  check(fgn_network_save(net.get(), weights.string().c_str()), "saving weights");
  check(fgn_training_run_write_metrics(result.get(), metrics.string().c_str()), "writing metrics");
  run.output(weights);
  run.output(metrics);
  if (o.checkpoints) run.output(out / "checkpoints");
  run.config()["stop_reason"] = fgn_training_run_stop_reason(result.get());
  run.write(out);
  std::printf("stopped: %s after %zu epochs\n", fgn_training_run_stop_reason(result.get()),
              fgn_training_run_epochs(result.get()));
  return kExitOk;
}

// ---- eval ---------------------------------------------------------------

struct EvalCmdOptions {
  CommonOptions common;
  std::string weights;
  std::string manifest;
  std::string predictions;
  std::string level = "frame";
  std::string histogram;
  double bn_epsilon = 1e-3;
};

int cmd_eval(const EvalCmdOptions& o) {
  if (o.predictions.empty() == (o.weights.empty() || o.manifest.empty()))
    throw CommandError(kExitUsage,
                       "give either --weights with --manifest, or --predictions");
  const fgn_eval_level level = o.level == "video" ? FGN_LEVEL_VIDEO : FGN_LEVEL_FRAME;

  const fs::path out = prepare_out(o.common.out);
  RunRecord run("eval", o.common);
  run.config() = json{{"level", o.level}};

  PredictionsHandle preds;
  if (!o.predictions.empty()) {
    run.config()["predictions"] = o.predictions;
    check(fgn_predictions_load(o.predictions.c_str(), preds.out()),
          "loading predictions " + o.predictions);
  } else {
    run.config()["weights"] = o.weights;
    run.config()["manifest"] = o.manifest;
    // The weights header carries the shape only; epsilon comes from the flag.
    fgn_network_config nc;
    {
      NetworkHandle probe;
      check(fgn_network_load(o.weights.c_str(), nullptr, probe.out()), "loading weights " + o.weights);
      check(fgn_network_get_config(probe.get(), &nc), "reading network config");
    }
    nc.bn_epsilon = o.bn_epsilon;
    NetworkHandle net;
    check(fgn_network_load(o.weights.c_str(), &nc, net.out()), "loading weights " + o.weights);
    json nj = network_json(nc);
    nj.erase("bn_momentum");
    run.config()["network"] = nj;
    ManifestHandle test_set;
    load_manifest(test_set, o.manifest, FGN_SPLIT_TEST);
    check(fgn_predict_manifest(net.get(), test_set.get(), preds.out()), "running inference");
  }

  const fs::path pred_path = out / "predictions.csv";
  check(fgn_predictions_save(preds.get(), pred_path.string().c_str()), "writing predictions");
  run.output(pred_path);

  EvaluationHandle eval;
  check(fgn_evaluate(preds.get(), level, eval.out()), "evaluating");
  const std::string table = fgn_evaluation_report(eval.get(), FGN_REPORT_TABLE);
  const fs::path report_txt = out / "report.txt";
  const fs::path report_jsonl = out / "report.jsonl";
  {
    std::ofstream f(report_txt, std::ios::binary | std::ios::trunc);
    f << table;
    std::ofstream j(report_jsonl, std::ios::binary | std::ios::trunc);
    j << fgn_evaluation_report(eval.get(), FGN_REPORT_JSONL);
    if (!f || !j) throw CommandError(kExitRuntime, "failed writing report");
  }
  run.output(report_txt);
  run.output(report_jsonl);

  if (!o.histogram.empty()) {
    run.config()["histogram"] = o.histogram;
    const fs::path hist = out / "histogram.csv";
    check(fgn_write_histogram_csv(preds.get(), o.histogram.c_str(), 10, hist.string().c_str()),
          "histogram for " + o.histogram);
    run.output(hist);
  }
  run.write(out);
  std::fputs(table.c_str(), stdout);
  return kExitOk;
}

// ---- ablate -------------------------------------------------------------

struct AblateCmdOptions {
  CommonOptions common;
  NetworkOptions network;
  TrainingOptions training;
  std::string axis;
  std::vector<std::uint32_t> values;
  std::optional<std::uint32_t> epochs;
  std::string manifest;
  std::string val_manifest;
  std::string test_manifest;
};

int cmd_ablate(const AblateCmdOptions& o) {
  fgn_axis axis;
  if (o.axis == "layers")
    axis = FGN_AXIS_LAYERS;
  else if (o.axis == "batch")
    axis = FGN_AXIS_BATCH;
  else if (o.axis == "filters")
    axis = FGN_AXIS_FILTERS;
  else
    throw CommandError(kExitUsage, "unknown axis '" + o.axis + "' (layers, batch, filters)");

  fgn_ablation_options ao{};
  ao.axis = axis;
  ao.values = o.values.data();
  ao.value_count = o.values.size();
  ao.epochs = o.epochs.value_or(0);
  ao.network = network_config(o.network, o.common.seed);
  ao.training = train_options(o.training, o.common);

  const fs::path out = prepare_out(o.common.out);
  RunRecord run("ablate", o.common);
  run.config() = json{{"axis", o.axis},
                      {"values", o.values},
                      {"network", network_json(ao.network)},
                      {"training", training_json(ao.training)},
                      {"manifest", o.manifest},
                      {"val_manifest", o.val_manifest},
                      {"test_manifest", o.test_manifest}};
  if (o.epochs) run.config()["epochs_per_point"] = *o.epochs;

  ManifestHandle train_set, val_set, test_set;
  load_manifest(train_set, o.manifest, FGN_SPLIT_TRAIN);
  load_manifest(val_set, o.val_manifest, FGN_SPLIT_VAL);
  load_manifest(test_set, o.test_manifest, FGN_SPLIT_TEST);

  AblationHandle result;
  check(fgn_run_ablation(&ao, train_set.get(), val_set.get(), test_set.get(), result.out()),
        "ablation");
  const fs::path csv = out / ("ablation_" + o.axis + ".csv");
  check(fgn_ablation_result_write_csv(result.get(), csv.string().c_str()), "writing ablation CSV");
  run.output(csv);
  run.write(out);

  for (std::size_t i = 0; i < fgn_ablation_result_size(result.get()); ++i) {
    fgn_ablation_row row;
    check(fgn_ablation_result_row(result.get(), i, &row), "reading ablation row");
    std::printf("%s=%u  train %.4f  val %.4f  test %.4f  %.1fs\n", o.axis.c_str(), row.value,
                row.train_acc, row.val_acc, row.test_acc, row.runtime);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forgenet: forged face video detector"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fgn_version());

  GenSynthOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "Write a synthetic original/fake frame dataset");
  add_common(gen_cmd, gen.common, true);
  gen_cmd->add_option("--videos", gen.videos, "Number of videos (even)")->capture_default_str();
  gen_cmd->add_option("--frames", gen.frames, "Frames per video")->capture_default_str();
  gen_cmd->add_option("--size", gen.size, "Frame height and width")->capture_default_str();

  TrainCmdOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a network and write weights + metrics");
  add_common(train_cmd, train.common, false);
  add_network(train_cmd, train.network);
  add_training(train_cmd, train.training, true);
  train_cmd->add_option("--manifest", train.manifest, "Training manifest CSV");
  train_cmd->add_option("--val-manifest", train.val_manifest, "Validation manifest CSV");
  train_cmd->add_flag("--checkpoints", train.checkpoints, "Save weights after every epoch");
  train_cmd->add_flag("--print-params", train.print_params, "Print the parameter count and exit");

  EvalCmdOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate weights or a prediction log");
  add_common(eval_cmd, eval.common, true);
  eval_cmd->add_option("--weights", eval.weights, "Weights file");
  eval_cmd->add_option("--manifest", eval.manifest, "Test manifest CSV");
  eval_cmd->add_option("--predictions", eval.predictions, "Existing prediction log CSV");
  eval_cmd->add_option("--level", eval.level, "frame or video")
      ->capture_default_str()
      ->check(CLI::IsMember({"frame", "video"}));
  eval_cmd->add_option("--histogram", eval.histogram, "Video id for a 10-bin probability histogram");
  eval_cmd->add_option("--bn-epsilon", eval.bn_epsilon, "Batchnorm epsilon the weights were trained with")
      ->capture_default_str();

  AblateCmdOptions ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Sweep one factor and write an axis CSV");
  add_common(ablate_cmd, ablate.common, true);
  add_network(ablate_cmd, ablate.network);
  add_training(ablate_cmd, ablate.training, false);
  ablate_cmd->add_option("--axis", ablate.axis, "layers, batch or filters")->required();
  ablate_cmd->add_option("--values", ablate.values, "Comma-separated values")
      ->required()
      ->delimiter(',');
  ablate_cmd->add_option("--epochs", ablate.epochs,
                         "Epochs per point (default: 10 for layers, 1 otherwise)");
  ablate_cmd->add_option("--manifest", ablate.manifest, "Training manifest CSV")->required();
  ablate_cmd->add_option("--val-manifest", ablate.val_manifest, "Validation manifest CSV")
      ->required();
  ablate_cmd->add_option("--test-manifest", ablate.test_manifest, "Test manifest CSV")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) {
      fgn_set_threads(gen.common.threads);
      return cmd_gen_synth(gen);
    }
    if (*train_cmd) {
      fgn_set_threads(train.common.threads);
      return cmd_train(train);
    }
    if (*eval_cmd) {
      fgn_set_threads(eval.common.threads);
      return cmd_eval(eval);
    }
    if (*ablate_cmd) {
      fgn_set_threads(ablate.common.threads);
      return cmd_ablate(ablate);
    }
  } catch (const CommandError& e) {
    std::fprintf(stderr, "forgenet: %s\n", e.what());
    return e.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "forgenet: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
