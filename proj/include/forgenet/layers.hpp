#pragma once

#include <span>
#include <vector>

#include "forgenet/tensor.hpp"

namespace forgenet {

enum class Mode { Training, Inference };

inline constexpr std::size_t kKernelSize = 3;
inline constexpr double kProbabilityClamp = 1e-7;

/// 3x3 valid convolution, stride 1, cross-correlation convention.
template <typename T>
struct ConvLayer {
  BasicTensor4<T> weights;  // (filters, in_channels, 3, 3)
  std::vector<T> bias;      // filters

  std::size_t filters() const noexcept { return weights.shape().n; }
  std::size_t in_channels() const noexcept { return weights.shape().c; }
};

template <typename T>
struct ConvGradients {
  BasicTensor4<T> weights;
  std::vector<T> bias;
  BasicTensor4<T> input;
};

template <typename T>
struct BatchNormLayer {
  std::vector<T> gamma;
  std::vector<T> beta;
  std::vector<T> moving_mean;
  std::vector<T> moving_var;
  T momentum = T(0.99);
  T epsilon = T(1e-3);

  std::size_t channels() const noexcept { return gamma.size(); }

  static BatchNormLayer identity(std::size_t channels, T momentum, T epsilon);
};

template <typename T>
struct BatchNormCache {
  Mode mode = Mode::Inference;
  BasicTensor4<T> normalized;  // pre-affine x-hat
  std::vector<T> inv_std;      // 1 / sqrt(var + eps), per channel
};

template <typename T>
struct BatchNormResult {
  BasicTensor4<T> output;
  BatchNormCache<T> cache;
};

template <typename T>
struct BatchNormGradients {
  std::vector<T> gamma;
  std::vector<T> beta;
  BasicTensor4<T> input;
};

/// Dense layer with a single output unit.
template <typename T>
struct DenseLayer {
  BasicTensor2<T> weights;  // (in_features, 1)
  T bias = T(0);

  std::size_t in_features() const noexcept { return weights.rows(); }
};

template <typename T>
struct DenseGradients {
  BasicTensor2<T> weights;
  T bias = T(0);
  BasicTensor2<T> input;
};

template <typename T>
struct BceResult {
  double loss = 0.0;
  std::vector<T> dlogits;  // gradient w.r.t. the pre-sigmoid logits
};

template <typename T>
BasicTensor4<T> conv2d_forward(const BasicTensor4<T>& x, const ConvLayer<T>& layer);

// Gradients of sum(upstream * conv2d_forward(x, layer)).
template <typename T>
ConvGradients<T> conv2d_backward(const BasicTensor4<T>& x, const ConvLayer<T>& layer,
                                 const BasicTensor4<T>& upstream);

// Training mode normalizes with batch statistics and updates the moving
// statistics of `layer`; inference mode reads the moving statistics only.
template <typename T>
BatchNormResult<T> batchnorm_forward(const BasicTensor4<T>& x, BatchNormLayer<T>& layer,
                                     Mode mode);

template <typename T>
BasicTensor4<T> batchnorm_inference(const BasicTensor4<T>& x, const BatchNormLayer<T>& layer);

template <typename T>
BatchNormGradients<T> batchnorm_backward(const BatchNormCache<T>& cache,
                                         const BatchNormLayer<T>& layer,
                                         const BasicTensor4<T>& upstream);

template <typename T>
BasicTensor4<T> relu_forward(const BasicTensor4<T>& x);

template <typename T>
BasicTensor4<T> relu_backward(const BasicTensor4<T>& x, const BasicTensor4<T>& upstream);

template <typename T>
std::vector<T> dense_forward(const BasicTensor2<T>& x, const DenseLayer<T>& layer);

template <typename T>
DenseGradients<T> dense_backward(const BasicTensor2<T>& x, const DenseLayer<T>& layer,
                                 std::span<const T> dlogits);

// Logistic function, clamped into [1e-7, 1 - 1e-7].
template <typename T>
std::vector<T> sigmoid(std::span<const T> logits);

// Mean binary cross-entropy. Labels must be 0 (original) or 1 (fake).
template <typename T>
BceResult<T> bce_loss(std::span<const T> probabilities, std::span<const int> labels);

}  // namespace forgenet
