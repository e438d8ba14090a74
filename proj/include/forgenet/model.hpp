#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "forgenet/layers.hpp"
#include "forgenet/tensor.hpp"

namespace forgenet {

/// Architecture as data. The defaults are the published detector:
/// four 3x3 conv blocks of 4 filters on a 3x128x128 input.
struct NetworkConfig {
  std::uint32_t conv_layers = 4;
  std::uint32_t filters = 4;
  std::uint32_t channels = 3;
  std::uint32_t height = 128;
  std::uint32_t width = 128;
  double bn_epsilon = 1e-3;
  double bn_momentum = 0.99;
  std::uint64_t seed = 0;

  // Throws a config error when the valid convolutions would exhaust the
  // input (height and width must each be >= 2 * conv_layers + 1).
  void validate() const;

  Shape4 input_shape(std::size_t batch) const {
    return Shape4{batch, channels, height, width};
  }
  std::size_t feature_height() const { return height - 2u * conv_layers; }
  std::size_t feature_width() const { return width - 2u * conv_layers; }
  std::size_t dense_inputs() const {
    return static_cast<std::size_t>(filters) * feature_height() * feature_width();
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

// Stored parameters including batchnorm moving statistics (4 values per
// channel), which is the accounting that yields 58,221 for the defaults.
std::uint64_t count_parameters(const NetworkConfig& config);

template <typename T>
struct ConvBlock {
  ConvLayer<T> conv;
  BatchNormLayer<T> bn;
};

// Named view onto one stored tensor, in serialization schema order.
template <typename T>
struct TensorRef {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::span<T> values;
};

template <typename T>
struct ForwardCache {
  struct Block {
    BasicTensor4<T> input;           // conv input
    BatchNormCache<T> bn;
    BasicTensor4<T> pre_activation;  // batchnorm output, ReLU input
  };

  Mode mode = Mode::Inference;
  std::uint64_t network_id = 0;
  std::uint64_t network_version = 0;
  std::vector<Block> blocks;
  Shape4 feature_shape{0, 0, 0, 0};
  BasicTensor2<T> features;
  std::vector<T> probabilities;
};

template <typename T>
struct ForwardResult {
  std::vector<T> probabilities;
  ForwardCache<T> cache;
};

/// Gradients of the mean BCE loss for every trainable tensor, in the order
/// of BasicNetwork::trainable_parameters().
template <typename T>
struct NetworkGradients {
  double loss = 0.0;
  std::vector<std::vector<T>> groups;

  std::vector<std::span<const T>> views() const {
    return {groups.begin(), groups.end()};
  }
};

template <typename T>
class BasicNetwork {
 public:
  // Glorot-uniform conv and dense weights drawn from config.seed, zero
  // biases, gamma=1, beta=0, moving mean 0, moving variance 1.
  static BasicNetwork build(const NetworkConfig& config);

  const NetworkConfig& config() const noexcept { return config_; }
  const std::vector<ConvBlock<T>>& blocks() const noexcept { return blocks_; }
  const DenseLayer<T>& dense() const noexcept { return dense_; }

  // Training mode updates batchnorm moving statistics and rejects batches
  // with a zero-variance input channel. Inference mode does not mutate.
  ForwardResult<T> forward(const BasicTensor4<T>& x, Mode mode);

  // Pure inference-mode forward pass.
  std::vector<T> predict(const BasicTensor4<T>& x) const;

  // Needs the cache of the latest training-mode forward on this network,
  // taken before any parameter was handed out for mutation.
  NetworkGradients<T> backward(const ForwardCache<T>& cache, std::span<const int> labels) const;

  // Mutable views of gamma, beta, conv and dense weights/biases. Obtaining
  // them invalidates outstanding forward caches.
  std::vector<std::span<T>> trainable_parameters();
  std::vector<std::string> trainable_names() const;

  // Every stored tensor (moving statistics included) in file schema order.
  std::vector<TensorRef<T>> tensors();
  std::vector<TensorRef<const T>> tensors() const;

  std::uint64_t stored_parameter_count() const;

 private:
  BasicNetwork() = default;
  void touch() noexcept { ++version_; }

  NetworkConfig config_;
  std::vector<ConvBlock<T>> blocks_;
  DenseLayer<T> dense_;
  std::uint64_t id_ = 0;
  std::uint64_t version_ = 0;
};

using Network = BasicNetwork<float>;

extern template class BasicNetwork<float>;
extern template class BasicNetwork<double>;

// Weights file: "FGN1", u32 conv_layers, filters, height, width, then each
// tensor in schema order as u32 rank, u32 dims, raw f32. All little-endian.
void save_weights(const Network& net, std::ostream& out);
void save_weights(const Network& net, const std::filesystem::path& destination);

// Loads against an expected config; mismatches raise a format error naming
// the first offending tensor or header field.
Network load_weights(std::istream& in, const NetworkConfig& config);
Network load_weights(const std::filesystem::path& source, const NetworkConfig& config);

// Loads using the architecture recorded in the header (default batchnorm
// constants, seed 0).
Network load_weights(const std::filesystem::path& source);
NetworkConfig read_weights_header(const std::filesystem::path& source);

}  // namespace forgenet
