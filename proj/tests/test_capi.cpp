// Exercises libforgenet.so through its C header only.

#include "forgenet/forgenet.h"

#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path path;
  explicit Scratch(const std::string& tag)
      : path(fs::temp_directory_path() / ("fgn_capi_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fgn_network_config small_config(uint32_t size) {
  fgn_network_config c;
  fgn_network_config_default(&c);
  c.conv_layers = 2;
  c.filters = 2;
  c.height = size;
  c.width = size;
  c.bn_momentum = 0.8;
  return c;
}

}  // namespace

TEST(CApi, VersionAndStatusNames) {
  EXPECT_NE(std::string(fgn_version()), "");
  EXPECT_STREQ(fgn_status_name(FGN_OK), "ok");
  EXPECT_NE(std::string(fgn_status_name(FGN_ERR_SHAPE)), std::string(fgn_status_name(FGN_ERR_CONFIG)));
  EXPECT_NE(fgn_status_name(static_cast<fgn_status>(99)), nullptr);
}

TEST(CApi, DefaultConfigHasPublishedParameterCount) {
  fgn_network_config c;
  fgn_network_config_default(&c);
  EXPECT_EQ(c.conv_layers, 4u);
  EXPECT_EQ(c.filters, 4u);
  EXPECT_EQ(c.height, 128u);
  uint64_t n = 0;
  ASSERT_EQ(fgn_count_parameters(&c, &n), FGN_OK);
  EXPECT_EQ(n, 58221u);

  fgn_network* net = nullptr;
  ASSERT_EQ(fgn_network_create(&c, &net), FGN_OK);
  uint64_t stored = 0;
  ASSERT_EQ(fgn_network_parameter_count(net, &stored), FGN_OK);
  EXPECT_EQ(stored, 58221u);
  fgn_network_destroy(net);
}

TEST(CApi, ErrorsCarryStatusAndMessage) {
  fgn_network_config c;
  fgn_network_config_default(&c);
  c.conv_layers = 0;
  fgn_network* net = reinterpret_cast<fgn_network*>(0x1);
  EXPECT_EQ(fgn_network_create(&c, &net), FGN_ERR_CONFIG);
  EXPECT_EQ(net, nullptr);
  EXPECT_NE(std::string(fgn_last_error()), "");

  EXPECT_EQ(fgn_network_create(nullptr, &net), FGN_ERR_INVALID_ARGUMENT);
  uint64_t n;
  EXPECT_EQ(fgn_count_parameters(&c, nullptr), FGN_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(fgn_network_parameter_count(nullptr, &n), FGN_ERR_INVALID_ARGUMENT);

  fgn_manifest* m = nullptr;
  EXPECT_EQ(fgn_manifest_load("/nonexistent/manifest.csv", FGN_SPLIT_TRAIN, &m), FGN_ERR_IO);
  EXPECT_EQ(m, nullptr);
  EXPECT_NE(std::string(fgn_last_error()).find("/nonexistent/manifest.csv"), std::string::npos);

  // destroy accepts NULL
  fgn_network_destroy(nullptr);
  fgn_manifest_destroy(nullptr);
  fgn_predictions_destroy(nullptr);
  fgn_evaluation_destroy(nullptr);
  fgn_training_run_destroy(nullptr);
  fgn_ablation_result_destroy(nullptr);
}

TEST(CApi, WeightsRoundtripAndHeaderMismatch) {
  Scratch dir("weights");
  fgn_network_config c = small_config(12);
  c.seed = 11;
  fgn_network* net = nullptr;
  ASSERT_EQ(fgn_network_create(&c, &net), FGN_OK);
  ASSERT_EQ(fgn_network_save(net, (dir / "w.fgn").c_str()), FGN_OK);

  fgn_network* back = nullptr;
  ASSERT_EQ(fgn_network_load((dir / "w.fgn").c_str(), nullptr, &back), FGN_OK);
  fgn_network_config got;
  ASSERT_EQ(fgn_network_get_config(back, &got), FGN_OK);
  EXPECT_EQ(got.conv_layers, 2u);
  EXPECT_EQ(got.height, 12u);
  ASSERT_EQ(fgn_network_save(back, (dir / "w2.fgn").c_str()), FGN_OK);
  EXPECT_EQ(slurp(dir / "w.fgn"), slurp(dir / "w2.fgn"));

  fgn_network_config other = c;
  other.filters = 3;
  fgn_network* bad = nullptr;
  EXPECT_EQ(fgn_network_load((dir / "w.fgn").c_str(), &other, &bad), FGN_ERR_FORMAT);
  EXPECT_NE(std::string(fgn_last_error()).find("block0.conv.weights"), std::string::npos);
  EXPECT_EQ(bad, nullptr);

  std::ofstream(dir / "junk.fgn") << "not weights";
  EXPECT_EQ(fgn_network_load((dir / "junk.fgn").c_str(), nullptr, &bad), FGN_ERR_FORMAT);

  fgn_network_destroy(back);
  fgn_network_destroy(net);
}

TEST(CApi, PredictReturnsProbabilities) {
  fgn_network_config c = small_config(8);
  fgn_network* net = nullptr;
  ASSERT_EQ(fgn_network_create(&c, &net), FGN_OK);
  std::vector<float> pixels(3 * 3 * 8 * 8);
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<float>(i % 17) / 17.0f;
  std::vector<float> p(3, -1.0f);
  ASSERT_EQ(fgn_network_predict(net, pixels.data(), 3, p.data()), FGN_OK);
  for (float v : p) {
    EXPECT_GT(v, 0.0f);
    EXPECT_LT(v, 1.0f);
  }
  EXPECT_EQ(fgn_network_predict(net, nullptr, 3, p.data()), FGN_ERR_INVALID_ARGUMENT);
  fgn_network_destroy(net);
}

TEST(CApi, TrainEvaluateAblate) {
  Scratch dir("pipeline");
  fgn_manifest* set = nullptr;
  ASSERT_EQ(fgn_generate_synthetic(4, 6, 12, 3, (dir / "data").c_str(), &set), FGN_OK);
  ASSERT_EQ(fgn_manifest_size(set), 24u);
  uint64_t originals = 0, fakes = 0;
  ASSERT_EQ(fgn_manifest_class_counts(set, &originals, &fakes), FGN_OK);
  EXPECT_EQ(originals, 12u);
  EXPECT_EQ(fakes, 12u);

  fgn_manifest* reloaded = nullptr;
  ASSERT_EQ(fgn_manifest_load((dir / "data/manifest.csv").c_str(), FGN_SPLIT_VAL, &reloaded), FGN_OK);
  EXPECT_EQ(fgn_manifest_size(reloaded), 24u);

  fgn_network_config c = small_config(12);
  fgn_network* net = nullptr;
  ASSERT_EQ(fgn_network_create(&c, &net), FGN_OK);

  fgn_train_options opts;
  fgn_train_options_default(&opts);
  EXPECT_EQ(opts.epochs, 10u);
  EXPECT_EQ(opts.batch_size, 128u);
  opts.epochs = 3;
  opts.batch_size = 8;
  opts.early_stop_delta = 0.0;
  opts.fixed_clock = 1;
  std::vector<uint32_t> seen;
  opts.on_epoch = [](const fgn_epoch_record* r, void* user) {
    static_cast<std::vector<uint32_t>*>(user)->push_back(r->epoch);
  };
  opts.user_data = &seen;
  fgn_training_run* run = nullptr;
  ASSERT_EQ(fgn_train(net, set, reloaded, &opts, &run), FGN_OK) << fgn_last_error();
  EXPECT_EQ(seen, (std::vector<uint32_t>{1, 2, 3}));
  ASSERT_EQ(fgn_training_run_epochs(run), 3u);
  fgn_epoch_record rec;
  ASSERT_EQ(fgn_training_run_epoch(run, 2, &rec), FGN_OK);
  EXPECT_EQ(rec.epoch, 3u);
  EXPECT_EQ(rec.wall_time, 0.0);
  EXPECT_EQ(fgn_training_run_epoch(run, 3, &rec), FGN_ERR_OUT_OF_RANGE);
  EXPECT_STREQ(fgn_training_run_stop_reason(run), "epochs_exhausted");
  ASSERT_EQ(fgn_training_run_write_metrics(run, (dir / "metrics.csv").c_str()), FGN_OK);
  EXPECT_EQ(slurp(dir / "metrics.csv").rfind("epoch,train_loss,train_acc,val_acc,wall_time\n", 0), 0u);

  fgn_predictions* preds = nullptr;
  ASSERT_EQ(fgn_predict_manifest(net, set, &preds), FGN_OK);
  EXPECT_EQ(fgn_predictions_size(preds), 24u);
  ASSERT_EQ(fgn_predictions_save(preds, (dir / "p.csv").c_str()), FGN_OK);
  fgn_predictions* loaded = nullptr;
  ASSERT_EQ(fgn_predictions_load((dir / "p.csv").c_str(), &loaded), FGN_OK);
  EXPECT_EQ(fgn_predictions_size(loaded), 24u);

  fgn_evaluation* frames = nullptr;
  ASSERT_EQ(fgn_evaluate(loaded, FGN_LEVEL_FRAME, &frames), FGN_OK);
  fgn_confusion conf;
  ASSERT_EQ(fgn_evaluation_confusion(frames, &conf), FGN_OK);
  EXPECT_EQ(conf.counts[0][0] + conf.counts[0][1] + conf.counts[1][0] + conf.counts[1][1], 24u);
  EXPECT_EQ(fgn_evaluation_verdicts(frames), 0u);

  fgn_evaluation* videos = nullptr;
  ASSERT_EQ(fgn_evaluate(loaded, FGN_LEVEL_VIDEO, &videos), FGN_OK);
  ASSERT_EQ(fgn_evaluation_verdicts(videos), 4u);
  fgn_video_verdict v;
  ASSERT_EQ(fgn_evaluation_verdict(videos, 0, &v), FGN_OK);
  EXPECT_EQ(v.frames_original + v.frames_fake, 6u);
  EXPECT_EQ(fgn_evaluation_verdict(videos, 4, &v), FGN_ERR_OUT_OF_RANGE);
  double acc = -1;
  ASSERT_EQ(fgn_evaluation_accuracy(videos, &acc), FGN_OK);
  EXPECT_GE(acc, 0.0);
  EXPECT_NE(std::string(fgn_evaluation_report(videos, FGN_REPORT_TABLE)).find("video-level"), std::string::npos);
  EXPECT_NE(std::string(fgn_evaluation_report(videos, FGN_REPORT_JSONL)).find("\"metric\":\"accuracy\""),
            std::string::npos);

  ASSERT_EQ(fgn_evaluation_verdict(videos, 0, &v), FGN_OK);
  uint64_t counts[10];
  ASSERT_EQ(fgn_probability_histogram(loaded, v.video_id, 10, counts), FGN_OK);
  uint64_t total = 0;
  for (uint64_t k : counts) total += k;
  EXPECT_EQ(total, 6u);
  ASSERT_EQ(fgn_probability_histogram(loaded, "missing", 10, counts), FGN_OK);
  for (uint64_t k : counts) EXPECT_EQ(k, 0u);
  ASSERT_EQ(fgn_write_histogram_csv(loaded, v.video_id, 10, (dir / "h.csv").c_str()), FGN_OK);
  EXPECT_EQ(slurp(dir / "h.csv").rfind("bin,lower,upper,count\n", 0), 0u);
  EXPECT_EQ(fgn_write_histogram_csv(loaded, "missing", 10, (dir / "h2.csv").c_str()), FGN_ERR_CONTRACT);

  const uint32_t values[] = {1, 2};
  fgn_ablation_options ab{};
  ab.axis = FGN_AXIS_LAYERS;
  ab.values = values;
  ab.value_count = 2;
  ab.epochs = 1;
  ab.network = c;
  ab.training = opts;
  ab.training.on_epoch = nullptr;
  fgn_ablation_result* result = nullptr;
  ASSERT_EQ(fgn_run_ablation(&ab, set, reloaded, reloaded, &result), FGN_OK) << fgn_last_error();
  ASSERT_EQ(fgn_ablation_result_size(result), 2u);
  fgn_ablation_row row;
  ASSERT_EQ(fgn_ablation_result_row(result, 1, &row), FGN_OK);
  EXPECT_EQ(row.value, 2u);
  EXPECT_EQ(row.runtime, 0.0);
  EXPECT_EQ(fgn_ablation_result_row(result, 2, &row), FGN_ERR_OUT_OF_RANGE);
  ASSERT_EQ(fgn_ablation_result_write_csv(result, (dir / "a.csv").c_str()), FGN_OK);
  EXPECT_EQ(slurp(dir / "a.csv").rfind("axis,value,train_acc,val_acc,test_acc,runtime_s\nlayers,1,", 0), 0u);

  ab.axis = static_cast<fgn_axis>(7);
  fgn_ablation_result* none = nullptr;
  EXPECT_EQ(fgn_run_ablation(&ab, set, reloaded, reloaded, &none), FGN_ERR_INVALID_ARGUMENT);

  fgn_ablation_result_destroy(result);
  fgn_evaluation_destroy(videos);
  fgn_evaluation_destroy(frames);
  fgn_predictions_destroy(loaded);
  fgn_predictions_destroy(preds);
  fgn_training_run_destroy(run);
  fgn_network_destroy(net);
  fgn_manifest_destroy(reloaded);
  fgn_manifest_destroy(set);
}

TEST(CApi, ShapeMismatchReported) {
  Scratch dir("shape");
  fgn_manifest* set = nullptr;
  ASSERT_EQ(fgn_generate_synthetic(2, 2, 10, 1, (dir / "data").c_str(), &set), FGN_OK);
  fgn_network_config c = small_config(12);
  fgn_network* net = nullptr;
  ASSERT_EQ(fgn_network_create(&c, &net), FGN_OK);
  fgn_train_options opts;
  fgn_train_options_default(&opts);
  fgn_training_run* run = nullptr;
  EXPECT_EQ(fgn_train(net, set, set, &opts, &run), FGN_ERR_SHAPE);
  EXPECT_EQ(run, nullptr);
  fgn_network_destroy(net);
  fgn_manifest_destroy(set);
}
