#include "forgenet/model.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "support.hpp"

using namespace forgenet;
using testsupport::central_difference;
using testsupport::expect_error;
using testsupport::random_tensor;
using testsupport::relative_error;

namespace {

NetworkConfig small_config(std::uint32_t layers, std::uint32_t filters, std::uint32_t size,
                           std::uint64_t seed = 1) {
  NetworkConfig c;
  c.conv_layers = layers;
  c.filters = filters;
  c.height = size;
  c.width = size;
  c.seed = seed;
  return c;
}

std::string serialize(const Network& net) {
  std::ostringstream out(std::ios::binary);
  save_weights(net, out);
  return out.str();
}

template <typename T>
std::vector<std::vector<T>> snapshot(const BasicNetwork<T>& net) {
  std::vector<std::vector<T>> out;
  for (const auto& t : net.tensors()) out.emplace_back(t.values.begin(), t.values.end());
  return out;
}

template <typename T>
TensorRef<T> find_tensor(BasicNetwork<T>& net, const std::string& name) {
  for (auto& t : net.tensors())
    if (t.name == name) return t;
  throw std::runtime_error("no tensor " + name);
}

}  // namespace

// ---- parameter counting --------------------------------------------------

TEST(CountParameters, DefaultIs58221) {
  EXPECT_EQ(count_parameters(NetworkConfig{}), 58221u);
}

TEST(CountParameters, Decomposition) {
  // conv1 112, three later convs 148 each, BN 16 per layer, dense 4*120*120+1.
  EXPECT_EQ(112u + 3u * 148u + 4u * 16u + (4u * 120u * 120u + 1u), 58221u);
  EXPECT_EQ(count_parameters(small_config(4, 4, 128)), 58221u);
}

TEST(CountParameters, SingleLayer) {
  EXPECT_EQ(count_parameters(small_config(1, 4, 128)), 112u + 16u + (4u * 126u * 126u + 1u));
  EXPECT_EQ(count_parameters(small_config(1, 4, 128)), 63633u);
}

TEST(CountParameters, MinimalInput) {
  EXPECT_EQ(count_parameters(small_config(4, 1, 9)), 28u + 3u * 10u + 4u * 4u + 2u);
  EXPECT_EQ(count_parameters(small_config(4, 1, 9)), 76u);
}

TEST(CountParameters, InvalidConfigRejected) {
  expect_error(ErrorKind::Config, [] { count_parameters(small_config(0, 4, 128)); });
}

// ---- build ---------------------------------------------------------------

TEST(Build, DefaultTallyMatchesCount) {
  const Network net = Network::build(NetworkConfig{});
  EXPECT_EQ(net.stored_parameter_count(), 58221u);
  std::uint64_t tally = 0;
  for (const auto& t : net.tensors()) tally += t.values.size();
  EXPECT_EQ(tally, 58221u);
}

TEST(Build, SameSeedBitIdentical) {
  const Network a = Network::build(small_config(3, 4, 32, 42));
  const Network b = Network::build(small_config(3, 4, 32, 42));
  EXPECT_EQ(serialize(a), serialize(b));
  const Network c = Network::build(small_config(3, 4, 32, 43));
  EXPECT_NE(serialize(a), serialize(c));
}

TEST(Build, SpatialBoundary) {
  EXPECT_NO_THROW(Network::build(small_config(4, 4, 9)));
  expect_error(ErrorKind::Config, [] { Network::build(small_config(4, 4, 8)); }, "8x8");
}

TEST(Build, InitialisationContract) {
  const Network net = Network::build(small_config(2, 3, 16, 5));
  for (const auto& block : net.blocks()) {
    for (float b : block.conv.bias) EXPECT_EQ(b, 0.0f);
    for (float g : block.bn.gamma) EXPECT_EQ(g, 1.0f);
    for (float b : block.bn.beta) EXPECT_EQ(b, 0.0f);
    for (float m : block.bn.moving_mean) EXPECT_EQ(m, 0.0f);
    for (float v : block.bn.moving_var) EXPECT_EQ(v, 1.0f);
    EXPECT_EQ(block.bn.momentum, 0.99f);
    EXPECT_EQ(block.bn.epsilon, 1e-3f);
  }
  EXPECT_EQ(net.dense().bias, 0.0f);
  // Glorot-uniform limits: conv1 fan_in 27, fan_out 27; dense fan_in 3*12*12, fan_out 1.
  const double conv_limit = std::sqrt(6.0 / (27 + 27));
  for (float w : net.blocks()[0].conv.weights.values()) EXPECT_LE(std::abs(w), conv_limit);
  const double dense_limit = std::sqrt(6.0 / (3 * 12 * 12 + 1));
  for (float w : net.dense().weights.values()) EXPECT_LE(std::abs(w), dense_limit);
}

// ---- forward -------------------------------------------------------------

TEST(Forward, ProbabilitiesInOpenInterval) {
  Network net = Network::build(small_config(4, 4, 32));
  Rng rng(1);
  const Tensor4 x = random_tensor<float>(rng, Shape4{4, 3, 32, 32}, 0, 1);
  for (float p : net.forward(x, Mode::Training).probabilities) {
    EXPECT_GT(p, 0.0f);
    EXPECT_LT(p, 1.0f);
  }
  for (float p : net.predict(x)) {
    EXPECT_GT(p, 0.0f);
    EXPECT_LT(p, 1.0f);
  }
}

TEST(Forward, InferenceIsBatchIndependent) {
  Network net = Network::build(small_config(3, 4, 20));
  Rng rng(2);
  const Tensor4 x = random_tensor<float>(rng, Shape4{5, 3, 20, 20}, 0, 1);
  net.forward(x, Mode::Training);  // move the statistics off their identity values
  const auto batch = net.predict(x);
  for (std::size_t i = 0; i < 5; ++i) {
    std::vector<float> one(x.values().begin() + i * x.shape().sample_size(),
                           x.values().begin() + (i + 1) * x.shape().sample_size());
    const auto single = net.predict(Tensor4(Shape4{1, 3, 20, 20}, one));
    EXPECT_NEAR(batch[i], single[0], 1e-6);
  }
}

TEST(Forward, InferenceIsPure) {
  Network net = Network::build(small_config(2, 2, 12));
  Rng rng(3);
  const Tensor4 x = random_tensor<float>(rng, Shape4{3, 3, 12, 12}, 0, 1);
  const auto before = snapshot(net);
  const auto a = net.forward(x, Mode::Inference).probabilities;
  const auto b = net.predict(x);
  EXPECT_EQ(a, b);
  EXPECT_EQ(snapshot(net), before);
}

TEST(Forward, TrainingChangesOnlyMovingStats) {
  Network net = Network::build(small_config(2, 2, 12));
  Rng rng(4);
  const Tensor4 x = random_tensor<float>(rng, Shape4{3, 3, 12, 12}, 0, 1);
  const auto before = snapshot(net);
  net.forward(x, Mode::Training);
  const auto after = snapshot(net);
  const auto names = net.tensors();
  for (std::size_t i = 0; i < names.size(); ++i) {
    const bool moving = names[i].name.find("moving") != std::string::npos;
    if (moving)
      EXPECT_NE(after[i], before[i]) << names[i].name;
    else
      EXPECT_EQ(after[i], before[i]) << names[i].name;
  }
}

TEST(Forward, ShapeMismatchRejected) {
  Network net = Network::build(small_config(2, 2, 12));
  expect_error(ErrorKind::Shape, [&] { net.predict(zeros(Shape4{1, 3, 12, 13})); });
  expect_error(ErrorKind::Shape, [&] { net.forward(zeros(Shape4{1, 1, 12, 12}), Mode::Training); });
}

// ---- backward ------------------------------------------------------------

TEST(Backward, EndToEndMatchesFiniteDifferences) {
  auto net = BasicNetwork<double>::build(small_config(2, 2, 12, 9));
  Rng rng(5);
  const auto x = random_tensor<double>(rng, Shape4{2, 3, 12, 12}, 0, 1);
  const std::vector<int> labels{0, 1};
  auto params = net.trainable_parameters();
  const auto fwd = net.forward(x, Mode::Training);
  const auto grads = net.backward(fwd.cache, labels);
  ASSERT_EQ(grads.groups.size(), params.size());
  auto loss = [&] { return bce_loss<double>(net.forward(x, Mode::Training).probabilities, labels).loss; };
  EXPECT_NEAR(grads.loss, loss(), 1e-12);
  const auto names = net.trainable_names();
  for (std::size_t g = 0; g < params.size(); ++g)
    for (std::size_t i = 0; i < params[g].size(); ++i) {
      const double numeric = central_difference(&params[g][i], loss);
      EXPECT_LT(relative_error(grads.groups[g][i], numeric, 1e-7), 1e-3)
          << names[g] << "[" << i << "] analytic " << grads.groups[g][i] << " numeric " << numeric;
    }
}

TEST(Backward, NearFixedPointGradientIsSmall) {
  auto net = BasicNetwork<double>::build(small_config(2, 2, 12, 3));
  for (double& w : find_tensor(net, "dense.weights").values) w = 0.0;
  find_tensor(net, "dense.bias").values[0] = 30.0;  // p saturates at the clamp
  Rng rng(6);
  const auto x = random_tensor<double>(rng, Shape4{4, 3, 12, 12}, 0, 1);
  const std::vector<int> labels{1, 1, 1, 1};
  const auto fwd = net.forward(x, Mode::Training);
  const auto grads = net.backward(fwd.cache, labels);
  double norm2 = 0.0;
  for (const auto& g : grads.groups)
    for (double v : g) norm2 += v * v;
  EXPECT_LT(std::sqrt(norm2), 1e-4);
}

TEST(Backward, MovingStatsGetNoGradient) {
  auto net = BasicNetwork<double>::build(small_config(2, 2, 12));
  const auto names = net.trainable_names();
  for (const auto& n : names) EXPECT_EQ(n.find("moving"), std::string::npos);
  EXPECT_EQ(names.size(), 2u * 4u + 2u);
}

TEST(Backward, ZeroVarianceInputChannelIsDegenerate) {
  Network net = Network::build(small_config(2, 2, 12));
  Rng rng(7);
  Tensor4 x = random_tensor<float>(rng, Shape4{2, 3, 12, 12}, 0, 1);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t p = 0; p < 144; ++p) x.plane(i, 1)[p] = 0.25f;
  expect_error(ErrorKind::DegenerateBatch, [&] { net.forward(x, Mode::Training); }, "channel 1");
}

TEST(Backward, StaleOrInferenceCacheRejected) {
  Network net = Network::build(small_config(2, 2, 12));
  Rng rng(8);
  const Tensor4 x = random_tensor<float>(rng, Shape4{2, 3, 12, 12}, 0, 1);
  const std::vector<int> labels{0, 1};

  const auto inference = net.forward(x, Mode::Inference);
  expect_error(ErrorKind::Contract, [&] { net.backward(inference.cache, labels); });

  const auto training = net.forward(x, Mode::Training);
  net.trainable_parameters();
  expect_error(ErrorKind::Contract, [&] { net.backward(training.cache, labels); }, "stale");

  Network other = Network::build(small_config(2, 2, 12));
  const auto foreign = other.forward(x, Mode::Training);
  expect_error(ErrorKind::Contract, [&] { net.backward(foreign.cache, labels); });
}

// ---- serialization -------------------------------------------------------

TEST(Weights, RoundtripBitExact) {
  Network net = Network::build(NetworkConfig{});
  Rng rng(9);
  const Tensor4 x = random_tensor<float>(rng, Shape4{2, 3, 128, 128}, 0, 1);
  net.forward(x, Mode::Training);  // non-trivial moving stats
  const std::string bytes = serialize(net);
  std::istringstream in(bytes);
  const Network loaded = load_weights(in, NetworkConfig{});
  const auto a = net.tensors();
  const auto b = loaded.tensors();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].values.size(), b[i].values.size());
    EXPECT_EQ(std::memcmp(a[i].values.data(), b[i].values.data(), a[i].values.size() * 4), 0)
        << a[i].name;
  }
  EXPECT_EQ(serialize(loaded), bytes);
}

TEST(Weights, LayoutIsDocumented) {
  const Network net = Network::build(small_config(1, 1, 3));
  const std::string bytes = serialize(net);
  auto u32 = [&](std::size_t off) {
    return std::uint32_t(std::uint8_t(bytes[off])) | std::uint32_t(std::uint8_t(bytes[off + 1])) << 8 |
           std::uint32_t(std::uint8_t(bytes[off + 2])) << 16 |
           std::uint32_t(std::uint8_t(bytes[off + 3])) << 24;
  };
  EXPECT_EQ(bytes.substr(0, 4), "FGN1");
  EXPECT_EQ(u32(4), 1u);
  EXPECT_EQ(u32(8), 1u);
  EXPECT_EQ(u32(12), 3u);
  EXPECT_EQ(u32(16), 3u);
  // conv.weights: rank 4, dims (1,3,3,3), 27 floats.
  EXPECT_EQ(u32(20), 4u);
  EXPECT_EQ(u32(24), 1u);
  EXPECT_EQ(u32(28), 3u);
  std::size_t expected = 20;
  for (const auto& t : net.tensors()) expected += 4 + 4 * t.dims.size() + 4 * t.values.size();
  EXPECT_EQ(bytes.size(), expected);
}

TEST(Weights, TruncatedFileRejected) {
  const std::string bytes = serialize(Network::build(small_config(2, 2, 12)));
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    std::istringstream in(bytes.substr(0, cut));
    expect_error(ErrorKind::Format, [&] { load_weights(in, small_config(2, 2, 12)); }, "truncated");
  }
}

TEST(Weights, FilterMismatchNamesFirstTensor) {
  const std::string bytes = serialize(Network::build(small_config(4, 4, 32)));
  std::istringstream in(bytes);
  expect_error(ErrorKind::Format, [&] { load_weights(in, small_config(4, 8, 32)); },
               "block0.conv.weights");
}

TEST(Weights, SizeMismatchNamesDense) {
  const std::string bytes = serialize(Network::build(small_config(2, 2, 16)));
  std::istringstream in(bytes);
  expect_error(ErrorKind::Format, [&] { load_weights(in, small_config(2, 2, 18)); },
               "dense.weights");
}

TEST(Weights, BadMagicAndVersion) {
  std::string bytes = serialize(Network::build(small_config(1, 1, 3)));
  bytes[0] = 'X';
  std::istringstream bad(bytes);
  expect_error(ErrorKind::Format, [&] { load_weights(bad, small_config(1, 1, 3)); }, "magic");
  bytes[0] = 'F';
  bytes[3] = '2';
  std::istringstream version(bytes);
  expect_error(ErrorKind::Format, [&] { load_weights(version, small_config(1, 1, 3)); }, "version");
}

TEST(Weights, TrailingBytesRejected) {
  std::string bytes = serialize(Network::build(small_config(1, 1, 3)));
  bytes += "x";
  std::istringstream in(bytes);
  expect_error(ErrorKind::Format, [&] { load_weights(in, small_config(1, 1, 3)); }, "trailing");
}

TEST(Weights, HeaderDrivenLoad) {
  testsupport::TempDir dir("weights");
  const Network net = Network::build(small_config(3, 2, 14, 77));
  save_weights(net, dir / "w.fgn");
  EXPECT_EQ(read_weights_header(dir / "w.fgn").filters, 2u);
  const Network loaded = load_weights(dir / "w.fgn");
  EXPECT_EQ(loaded.config().conv_layers, 3u);
  EXPECT_EQ(loaded.config().height, 14u);
  EXPECT_EQ(serialize(loaded), serialize(net));
  expect_error(ErrorKind::Io, [&] { load_weights(dir / "missing.fgn"); });
}
