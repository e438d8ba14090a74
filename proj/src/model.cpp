#include "forgenet/model.hpp"

#include <atomic>
#include <cmath>

#include "forgenet/random.hpp"

namespace forgenet {

namespace {

std::atomic<std::uint64_t> g_next_network_id{1};

template <typename T>
void glorot_uniform(std::span<T> values, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (T& v : values) v = static_cast<T>(rng.uniform(-limit, limit));
}

template <typename T>
std::span<T> as_span(std::vector<T>& v) {
  return {v.data(), v.size()};
}

}  // namespace

void NetworkConfig::validate() const {
  if (conv_layers < 1)
    fail(ErrorKind::Config, "conv_layers must be >= 1, got " + std::to_string(conv_layers));
  if (filters < 1) fail(ErrorKind::Config, "filters must be >= 1, got " + std::to_string(filters));
  if (channels < 1) fail(ErrorKind::Config, "channels must be >= 1");
  const std::uint64_t min_extent = 2ull * conv_layers + 1;
  if (height < min_extent || width < min_extent)
    fail(ErrorKind::Config, "input " + std::to_string(height) + "x" + std::to_string(width) +
                                " is too small for " + std::to_string(conv_layers) +
                                " valid 3x3 convolutions (need >= " +
                                std::to_string(min_extent) + ")");
  if (!(bn_epsilon > 0.0)) fail(ErrorKind::Config, "bn_epsilon must be positive");
  if (!(bn_momentum > 0.0 && bn_momentum < 1.0))
    fail(ErrorKind::Config, "bn_momentum must lie in (0,1)");
}

std::uint64_t count_parameters(const NetworkConfig& config) {
  config.validate();
  const std::uint64_t f = config.filters;
  const std::uint64_t k2 = kKernelSize * kKernelSize;
  std::uint64_t total = config.channels * k2 * f + f;              // first conv
  total += (config.conv_layers - 1) * (f * k2 * f + f);              // later convs
  total += config.conv_layers * 4 * f;                               // gamma, beta, moving stats
  total += f * config.feature_height() * config.feature_width() + 1;  // dense
  return total;
}

template <typename T>
BasicNetwork<T> BasicNetwork<T>::build(const NetworkConfig& config) {
  config.validate();
  BasicNetwork net;
  net.config_ = config;
  net.id_ = g_next_network_id.fetch_add(1);

  Rng rng(config.seed);
  std::size_t in_channels = config.channels;
  const std::size_t k2 = kKernelSize * kKernelSize;
  for (std::uint32_t l = 0; l < config.conv_layers; ++l) {
    ConvBlock<T> block;
    block.conv.weights = BasicTensor4<T>(Shape4{config.filters, in_channels, kKernelSize, kKernelSize});
    glorot_uniform(block.conv.weights.data(), in_channels * k2, config.filters * k2, rng);
    block.conv.bias.assign(config.filters, T(0));
    block.bn = BatchNormLayer<T>::identity(config.filters, static_cast<T>(config.bn_momentum),
                                           static_cast<T>(config.bn_epsilon));
    net.blocks_.push_back(std::move(block));
    in_channels = config.filters;
  }
  net.dense_.weights = BasicTensor2<T>(Shape2{config.dense_inputs(), 1});
  glorot_uniform(net.dense_.weights.data(), config.dense_inputs(), 1, rng);
  net.dense_.bias = T(0);
  return net;
}

template <typename T>
ForwardResult<T> BasicNetwork<T>::forward(const BasicTensor4<T>& x, Mode mode) {
  if (mode == Mode::Inference) {
    ForwardResult<T> r;
    r.probabilities = predict(x);
    r.cache.mode = Mode::Inference;
    r.cache.network_id = id_;
    r.cache.network_version = version_;
    r.cache.probabilities = r.probabilities;
    return r;
  }

  const Shape4 expected = config_.input_shape(x.shape().n);
  if (x.empty() || x.shape() != expected)
    fail(ErrorKind::Shape, "network input " + to_string(x.shape()) + " does not match " +
                               to_string(expected));

  const Shape4& s = x.shape();
  for (std::size_t c = 0; c < s.c; ++c) {
    const T first = x(0, c, 0, 0);
    bool constant = true;
    for (std::size_t i = 0; i < s.n && constant; ++i) {
      const T* p = x.plane(i, c);
      for (std::size_t j = 0; j < s.plane_size(); ++j)
        if (p[j] != first) {
          constant = false;
          break;
        }
    }
    if (constant)
      fail(ErrorKind::DegenerateBatch,
           "input channel " + std::to_string(c) + " has zero variance over the batch");
  }

  ForwardResult<T> r;
  ForwardCache<T>& cache = r.cache;
  cache.mode = Mode::Training;
  cache.network_id = id_;
  cache.network_version = version_;
  cache.blocks.reserve(blocks_.size());

  BasicTensor4<T> act = x;
  for (ConvBlock<T>& block : blocks_) {
    typename ForwardCache<T>::Block bc;
    BasicTensor4<T> conv = conv2d_forward(act, block.conv);
    bc.input = std::move(act);
    BatchNormResult<T> bn = batchnorm_forward(conv, block.bn, Mode::Training);
    bc.bn = std::move(bn.cache);
    act = relu_forward(bn.output);
    bc.pre_activation = std::move(bn.output);
    cache.blocks.push_back(std::move(bc));
  }
  cache.feature_shape = act.shape();
  cache.features = flatten(act);
  const std::vector<T> logits = dense_forward(cache.features, dense_);
  r.probabilities = sigmoid<T>(logits);
  cache.probabilities = r.probabilities;
  return r;
}

template <typename T>
std::vector<T> BasicNetwork<T>::predict(const BasicTensor4<T>& x) const {
  const Shape4 expected = config_.input_shape(x.shape().n);
  if (x.empty() || x.shape() != expected)
    fail(ErrorKind::Shape, "network input " + to_string(x.shape()) + " does not match " +
                               to_string(expected));
  BasicTensor4<T> act = x;
  for (const ConvBlock<T>& block : blocks_)
    act = relu_forward(batchnorm_inference(conv2d_forward(act, block.conv), block.bn));
  const std::vector<T> logits = dense_forward(flatten(act), dense_);
  return sigmoid<T>(logits);
}

template <typename T>
NetworkGradients<T> BasicNetwork<T>::backward(const ForwardCache<T>& cache,
                                              std::span<const int> labels) const {
  if (cache.mode != Mode::Training || cache.blocks.size() != blocks_.size())
    fail(ErrorKind::Contract, "backward needs the cache of a training-mode forward pass");
  if (cache.network_id != id_ || cache.network_version != version_)
    fail(ErrorKind::Contract, "backward: forward cache is stale (network changed since forward)");

  const BceResult<T> bce = bce_loss<T>(cache.probabilities, labels);
  NetworkGradients<T> grads;
  grads.loss = bce.loss;
  grads.groups.resize(4 * blocks_.size() + 2);

  const DenseGradients<T> dg = dense_backward<T>(cache.features, dense_, bce.dlogits);
  grads.groups[4 * blocks_.size()] = dg.weights.values();
  grads.groups[4 * blocks_.size() + 1] = {dg.bias};

  BasicTensor4<T> upstream = unflatten(dg.input, cache.feature_shape);
  for (std::size_t b = blocks_.size(); b-- > 0;) {
    const auto& bc = cache.blocks[b];
    const BasicTensor4<T> d_bn = relu_backward(bc.pre_activation, upstream);
    BatchNormGradients<T> bng = batchnorm_backward(bc.bn, blocks_[b].bn, d_bn);
    ConvGradients<T> cg = conv2d_backward(bc.input, blocks_[b].conv, bng.input);
    grads.groups[4 * b + 0] = cg.weights.values();
    grads.groups[4 * b + 1] = std::move(cg.bias);
    grads.groups[4 * b + 2] = std::move(bng.gamma);
    grads.groups[4 * b + 3] = std::move(bng.beta);
    upstream = std::move(cg.input);
  }
  return grads;
}

template <typename T>
std::vector<std::span<T>> BasicNetwork<T>::trainable_parameters() {
  touch();
  std::vector<std::span<T>> out;
  for (ConvBlock<T>& block : blocks_) {
    out.push_back(block.conv.weights.data());
    out.push_back(as_span(block.conv.bias));
    out.push_back(as_span(block.bn.gamma));
    out.push_back(as_span(block.bn.beta));
  }
  out.push_back(dense_.weights.data());
  out.push_back(std::span<T>(&dense_.bias, 1));
  return out;
}

template <typename T>
std::vector<std::string> BasicNetwork<T>::trainable_names() const {
  std::vector<std::string> names;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    names.push_back(p + "conv.weights");
    names.push_back(p + "conv.bias");
    names.push_back(p + "bn.gamma");
    names.push_back(p + "bn.beta");
  }
  names.push_back("dense.weights");
  names.push_back("dense.bias");
  return names;
}

namespace {

template <typename Q, typename Blocks, typename Dense>
std::vector<TensorRef<Q>> collect_tensors(Blocks& blocks, Dense& dense) {
  auto dims4 = [](const Shape4& s) {
    return std::vector<std::uint32_t>{static_cast<std::uint32_t>(s.n),
                                      static_cast<std::uint32_t>(s.c),
                                      static_cast<std::uint32_t>(s.h),
                                      static_cast<std::uint32_t>(s.w)};
  };
  auto dims1 = [](std::size_t n) { return std::vector<std::uint32_t>{static_cast<std::uint32_t>(n)}; };
  auto vec = [](auto& v) { return std::span<Q>(v.data(), v.size()); };

  std::vector<TensorRef<Q>> out;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& block = blocks[b];
    const std::string p = "block" + std::to_string(b) + ".";
    out.push_back({p + "conv.weights", dims4(block.conv.weights.shape()), block.conv.weights.data()});
    out.push_back({p + "conv.bias", dims1(block.conv.bias.size()), vec(block.conv.bias)});
    out.push_back({p + "bn.gamma", dims1(block.bn.gamma.size()), vec(block.bn.gamma)});
    out.push_back({p + "bn.beta", dims1(block.bn.beta.size()), vec(block.bn.beta)});
    out.push_back({p + "bn.moving_mean", dims1(block.bn.moving_mean.size()), vec(block.bn.moving_mean)});
    out.push_back({p + "bn.moving_var", dims1(block.bn.moving_var.size()), vec(block.bn.moving_var)});
  }
  out.push_back({"dense.weights",
                 {static_cast<std::uint32_t>(dense.weights.rows()),
                  static_cast<std::uint32_t>(dense.weights.cols())},
                 dense.weights.data()});
  out.push_back({"dense.bias", {1}, std::span<Q>(&dense.bias, 1)});
  return out;
}

}  // namespace

template <typename T>
std::vector<TensorRef<T>> BasicNetwork<T>::tensors() {
  touch();
  return collect_tensors<T>(blocks_, dense_);
}

template <typename T>
std::vector<TensorRef<const T>> BasicNetwork<T>::tensors() const {
  return collect_tensors<const T>(blocks_, dense_);
}

template <typename T>
std::uint64_t BasicNetwork<T>::stored_parameter_count() const {
  std::uint64_t total = 0;
  for (const auto& t : tensors()) total += t.values.size();
  return total;
}

template class BasicNetwork<float>;
template class BasicNetwork<double>;

}  // namespace forgenet
