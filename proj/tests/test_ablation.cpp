#include "forgenet/ablation.hpp"

#include "support.hpp"

using namespace forgenet;
using testsupport::expect_error;
using testsupport::read_file;
using testsupport::TempDir;

namespace {

class AblationSets : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("ablation");
    set_ = new DatasetManifest(generate_synthetic(4, 8, 16, 5, dir_->path() / "set"));
  }
  static void TearDownTestSuite() {
    delete set_;
    delete dir_;
  }

  static AblationSpec spec(AblationAxis axis, std::vector<std::uint32_t> values) {
    AblationSpec s;
    s.axis = axis;
    s.values = std::move(values);
    s.network.conv_layers = 2;
    s.network.filters = 2;
    s.network.height = 16;
    s.network.width = 16;
    s.network.bn_momentum = 0.8;
    s.training.epochs = 2;
    s.training.batch_size = 8;
    s.training.fixed_clock = true;
    s.training.early_stop_delta = 0.0;
    return s;
  }

  static TempDir* dir_;
  static DatasetManifest* set_;
};

TempDir* AblationSets::dir_ = nullptr;
DatasetManifest* AblationSets::set_ = nullptr;

}  // namespace

TEST(AblationAxis, Names) {
  EXPECT_EQ(parse_axis("layers"), AblationAxis::Layers);
  EXPECT_EQ(parse_axis("batch"), AblationAxis::BatchSize);
  EXPECT_EQ(parse_axis("batch_size"), AblationAxis::BatchSize);
  EXPECT_EQ(parse_axis("filters"), AblationAxis::Filters);
  EXPECT_FALSE(parse_axis("depth").has_value());
  EXPECT_STREQ(to_string(AblationAxis::BatchSize), "batch");
}

TEST(AblationSpec, Validation) {
  AblationSpec s;
  expect_error(ErrorKind::Config, [&] { s.validate(); }, "no values");
  s.values = {4, 2};
  expect_error(ErrorKind::Config, [&] { s.validate(); }, "4 then 2");
  s.values = {2, 2};
  expect_error(ErrorKind::Config, [&] { s.validate(); });
  s.values = {1, 2};
  s.epochs = 0;
  expect_error(ErrorKind::Config, [&] { s.validate(); });
}

TEST(AblationSpec, EpochDefaults) {
  AblationSpec s;
  s.training.epochs = 7;
  s.axis = AblationAxis::Layers;
  EXPECT_EQ(s.effective_epochs(), 7u);
  s.axis = AblationAxis::BatchSize;
  EXPECT_EQ(s.effective_epochs(), 1u);
  s.axis = AblationAxis::Filters;
  EXPECT_EQ(s.effective_epochs(), 1u);
  s.epochs = 3;
  EXPECT_EQ(s.effective_epochs(), 3u);
}

TEST(AblationCsv, Format) {
  const std::vector<AblationRow> rows{{1, 0.5, 0.25, 0.75, 1.5}, {4, 1.0, 1.0, 1.0, 0.0}};
  EXPECT_EQ(format_ablation_csv(AblationAxis::Layers, rows),
            "axis,value,train_acc,val_acc,test_acc,runtime_s\n"
            "layers,1,0.500000,0.250000,0.750000,1.500\n"
            "layers,4,1.000000,1.000000,1.000000,0.000\n");
}

TEST_F(AblationSets, InvalidPointNamedBeforeAnyRun) {
  // 16x16 shrinks to nothing after 8 valid convolutions.
  int rows = 0;
  expect_error(
      ErrorKind::Config,
      [&] {
        run_ablation(spec(AblationAxis::Layers, {1, 8}), *set_, *set_, *set_,
                     [&](const AblationRow&) { ++rows; });
      },
      "layers=8");
  EXPECT_EQ(rows, 0);
  expect_error(ErrorKind::Config,
               [&] { run_ablation(spec(AblationAxis::Filters, {0, 2}), *set_, *set_, *set_); },
               "filters=0");
  expect_error(ErrorKind::Config,
               [&] { run_ablation(spec(AblationAxis::BatchSize, {0, 4}), *set_, *set_, *set_); },
               "batch=0");
}

TEST_F(AblationSets, EmptySetRejected) {
  DatasetManifest empty;
  expect_error(ErrorKind::Contract,
               [&] { run_ablation(spec(AblationAxis::Layers, {1}), *set_, *set_, empty); });
}

TEST_F(AblationSets, LayerRowsInOrder) {
  const auto rows = run_ablation(spec(AblationAxis::Layers, {1, 2, 3}), *set_, *set_, *set_);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].value, i + 1);
    for (double a : {rows[i].train_acc, rows[i].val_acc, rows[i].test_acc}) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
    EXPECT_EQ(rows[i].runtime, 0.0);
  }
}

TEST_F(AblationSets, BatchAndFilterAxes) {
  const auto batch = run_ablation(spec(AblationAxis::BatchSize, {2, 4, 8, 16, 32}), *set_, *set_, *set_);
  ASSERT_EQ(batch.size(), 5u);
  EXPECT_EQ(batch[4].value, 32u);
  const auto filters = run_ablation(spec(AblationAxis::Filters, {4, 8}), *set_, *set_, *set_);
  ASSERT_EQ(filters.size(), 2u);
  EXPECT_EQ(filters[1].value, 8u);
}

TEST_F(AblationSets, Deterministic) {
  const auto s = spec(AblationAxis::Filters, {1, 2});
  const auto a = run_ablation(s, *set_, *set_, *set_);
  const auto b = run_ablation(s, *set_, *set_, *set_);
  EXPECT_EQ(a, b);
  TempDir out("abl_csv");
  write_ablation_csv(out / "a.csv", s.axis, a);
  EXPECT_EQ(read_file(out / "a.csv"), format_ablation_csv(s.axis, b));
}

TEST_F(AblationSets, SweptPointMatchesDirectTraining) {
  const auto s = spec(AblationAxis::Layers, {1, 2});
  const auto rows = run_ablation(s, *set_, *set_, *set_);
  NetworkConfig nc = s.network;
  nc.conv_layers = 2;
  TrainConfig tc = s.training;
  Network net = Network::build(nc);
  const TrainResult r = train(net, *set_, *set_, tc);
  EXPECT_EQ(rows[1].train_acc, r.epochs.back().train_acc);
  EXPECT_EQ(rows[1].val_acc, r.epochs.back().val_acc);
  EXPECT_EQ(rows[1].test_acc, accuracy(net, *set_, tc.batch_size));
}
