#include "forgenet/layers.hpp"

#include <algorithm>
#include <cmath>

#include "forgenet/parallel.hpp"

namespace forgenet {

namespace {

void require_shape(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::Shape, what);
}

template <typename T>
void check_conv_input(const BasicTensor4<T>& x, const ConvLayer<T>& layer) {
  const Shape4& s = x.shape();
  require_shape(s.count() > 0, "conv2d: empty input");
  require_shape(s.h >= kKernelSize && s.w >= kKernelSize,
                "conv2d: spatial dims of " + to_string(s) + " are smaller than 3x3");
  require_shape(s.c == layer.in_channels(),
                "conv2d: input has " + std::to_string(s.c) + " channels, layer expects " +
                    std::to_string(layer.in_channels()));
  require_shape(layer.bias.size() == layer.filters(), "conv2d: bias length != filters");
}

}  // namespace

template <typename T>
BatchNormLayer<T> BatchNormLayer<T>::identity(std::size_t channels, T momentum, T epsilon) {
  if (channels == 0) fail(ErrorKind::Config, "batchnorm: zero channels");
  if (!(epsilon > T(0))) fail(ErrorKind::Config, "batchnorm: epsilon must be positive");
  if (!(momentum > T(0) && momentum < T(1)))
    fail(ErrorKind::Config, "batchnorm: momentum must lie in (0,1)");
  BatchNormLayer layer;
  layer.gamma.assign(channels, T(1));
  layer.beta.assign(channels, T(0));
  layer.moving_mean.assign(channels, T(0));
  layer.moving_var.assign(channels, T(1));
  layer.momentum = momentum;
  layer.epsilon = epsilon;
  return layer;
}

template <typename T>
BasicTensor4<T> conv2d_forward(const BasicTensor4<T>& x, const ConvLayer<T>& layer) {
  check_conv_input(x, layer);
  const Shape4& s = x.shape();
  const std::size_t k = layer.filters();
  const std::size_t oh = s.h - 2, ow = s.w - 2;
  BasicTensor4<T> out(Shape4{s.n, k, oh, ow});

  parallel_for(s.n * k, [&](std::size_t job) {
    const std::size_t i = job / k, f = job % k;
    T* dst = out.plane(i, f);
    std::fill(dst, dst + oh * ow, layer.bias[f]);
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* src = x.plane(i, c);
      for (std::size_t dy = 0; dy < kKernelSize; ++dy) {
        for (std::size_t dx = 0; dx < kKernelSize; ++dx) {
          const T wv = layer.weights(f, c, dy, dx);
          for (std::size_t y = 0; y < oh; ++y) {
            const T* row = src + (y + dy) * s.w + dx;
            T* o = dst + y * ow;
            for (std::size_t xx = 0; xx < ow; ++xx) o[xx] += wv * row[xx];
          }
        }
      }
    }
  });
  return out;
}

template <typename T>
ConvGradients<T> conv2d_backward(const BasicTensor4<T>& x, const ConvLayer<T>& layer,
                                 const BasicTensor4<T>& upstream) {
  check_conv_input(x, layer);
  const Shape4& s = x.shape();
  const std::size_t k = layer.filters();
  const std::size_t oh = s.h - 2, ow = s.w - 2;
  require_shape(upstream.shape() == Shape4{s.n, k, oh, ow},
                "conv2d_backward: upstream " + to_string(upstream.shape()) +
                    " does not match forward output " + to_string(Shape4{s.n, k, oh, ow}));

  ConvGradients<T> g;
  g.weights = BasicTensor4<T>(layer.weights.shape());
  g.bias.assign(k, T(0));
  g.input = BasicTensor4<T>(s);

  // Per-sample partials, reduced below in sample order so the result is the
  // same for every thread count.
  const std::size_t wsize = layer.weights.size();
  std::vector<T> partial_w(s.n * wsize, T(0));
  std::vector<T> partial_b(s.n * k, T(0));

  parallel_for(s.n, [&](std::size_t i) {
    T* pw = partial_w.data() + i * wsize;
    T* pb = partial_b.data() + i * k;
    for (std::size_t f = 0; f < k; ++f) {
      const T* up = upstream.plane(i, f);
      T bsum = T(0);
      for (std::size_t p = 0; p < oh * ow; ++p) bsum += up[p];
      pb[f] = bsum;
      for (std::size_t c = 0; c < s.c; ++c) {
        const T* src = x.plane(i, c);
        T* din = g.input.plane(i, c);
        for (std::size_t dy = 0; dy < kKernelSize; ++dy) {
          for (std::size_t dx = 0; dx < kKernelSize; ++dx) {
            const T wv = layer.weights(f, c, dy, dx);
            T acc = T(0);
            for (std::size_t y = 0; y < oh; ++y) {
              const T* row = src + (y + dy) * s.w + dx;
              T* drow = din + (y + dy) * s.w + dx;
              const T* urow = up + y * ow;
              for (std::size_t xx = 0; xx < ow; ++xx) {
                acc += urow[xx] * row[xx];
                drow[xx] += urow[xx] * wv;
              }
            }
            pw[((f * s.c + c) * kKernelSize + dy) * kKernelSize + dx] = acc;
          }
        }
      }
    }
  });

  for (std::size_t i = 0; i < s.n; ++i) {
    const T* pw = partial_w.data() + i * wsize;
    for (std::size_t j = 0; j < wsize; ++j) g.weights[j] += pw[j];
    for (std::size_t f = 0; f < k; ++f) g.bias[f] += partial_b[i * k + f];
  }
  return g;
}

template <typename T>
BatchNormResult<T> batchnorm_forward(const BasicTensor4<T>& x, BatchNormLayer<T>& layer,
                                     Mode mode) {
  const Shape4& s = x.shape();
  require_shape(s.c == layer.channels(),
                "batchnorm: input has " + std::to_string(s.c) +
                    " channels, layer expects " + std::to_string(layer.channels()));
  BatchNormResult<T> result;
  result.cache.mode = mode;
  if (mode == Mode::Inference) {
    result.output = batchnorm_inference(x, layer);
    return result;
  }

  const std::size_t per_channel = s.n * s.h * s.w;
  if (per_channel < 2)
    fail(ErrorKind::DegenerateBatch,
         "batchnorm: training mode needs at least 2 values per channel, got " +
             std::to_string(per_channel));

  const std::size_t plane = s.plane_size();
  result.output = BasicTensor4<T>(s);
  result.cache.normalized = BasicTensor4<T>(s);
  result.cache.inv_std.assign(s.c, T(0));
  std::vector<double> batch_mean(s.c), batch_var(s.c);

  parallel_for(s.c, [&](std::size_t c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) {
      const T* p = x.plane(i, c);
      for (std::size_t j = 0; j < plane; ++j) sum += p[j];
    }
    const double mean = sum / static_cast<double>(per_channel);
    double sq = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) {
      const T* p = x.plane(i, c);
      for (std::size_t j = 0; j < plane; ++j) {
        const double d = p[j] - mean;
        sq += d * d;
      }
    }
    const double var = sq / static_cast<double>(per_channel);
    const double inv_std = 1.0 / std::sqrt(var + static_cast<double>(layer.epsilon));
    batch_mean[c] = mean;
    batch_var[c] = var;
    result.cache.inv_std[c] = static_cast<T>(inv_std);

    const T gamma = layer.gamma[c], beta = layer.beta[c];
    for (std::size_t i = 0; i < s.n; ++i) {
      const T* p = x.plane(i, c);
      T* xhat = result.cache.normalized.plane(i, c);
      T* out = result.output.plane(i, c);
      for (std::size_t j = 0; j < plane; ++j) {
        xhat[j] = static_cast<T>((p[j] - mean) * inv_std);
        out[j] = gamma * xhat[j] + beta;
      }
    }
  });

  const T m = layer.momentum;
  for (std::size_t c = 0; c < s.c; ++c) {
    layer.moving_mean[c] = m * layer.moving_mean[c] + (T(1) - m) * static_cast<T>(batch_mean[c]);
    layer.moving_var[c] = m * layer.moving_var[c] + (T(1) - m) * static_cast<T>(batch_var[c]);
  }
  return result;
}

template <typename T>
BasicTensor4<T> batchnorm_inference(const BasicTensor4<T>& x, const BatchNormLayer<T>& layer) {
  const Shape4& s = x.shape();
  require_shape(s.c == layer.channels(),
                "batchnorm: input has " + std::to_string(s.c) +
                    " channels, layer expects " + std::to_string(layer.channels()));
  BasicTensor4<T> out(s);
  const std::size_t plane = s.plane_size();
  for (std::size_t c = 0; c < s.c; ++c) {
    const T inv_std = static_cast<T>(
        1.0 / std::sqrt(static_cast<double>(layer.moving_var[c]) + layer.epsilon));
    const T scale = layer.gamma[c] * inv_std;
    const T shift = layer.beta[c] - layer.moving_mean[c] * scale;
    for (std::size_t i = 0; i < s.n; ++i) {
      const T* p = x.plane(i, c);
      T* o = out.plane(i, c);
      for (std::size_t j = 0; j < plane; ++j) o[j] = p[j] * scale + shift;
    }
  }
  return out;
}

template <typename T>
BatchNormGradients<T> batchnorm_backward(const BatchNormCache<T>& cache,
                                         const BatchNormLayer<T>& layer,
                                         const BasicTensor4<T>& upstream) {
  if (cache.mode != Mode::Training || cache.normalized.empty())
    fail(ErrorKind::Contract, "batchnorm_backward needs a training-mode cache");
  const Shape4& s = cache.normalized.shape();
  require_shape(upstream.shape() == s, "batchnorm_backward: upstream " +
                                           to_string(upstream.shape()) + " != " + to_string(s));
  require_shape(layer.channels() == s.c, "batchnorm_backward: channel mismatch");

  BatchNormGradients<T> g;
  g.gamma.assign(s.c, T(0));
  g.beta.assign(s.c, T(0));
  g.input = BasicTensor4<T>(s);
  const std::size_t plane = s.plane_size();
  const double count = static_cast<double>(s.n * plane);

  parallel_for(s.c, [&](std::size_t c) {
    double sum_up = 0.0, sum_up_xhat = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) {
      const T* up = upstream.plane(i, c);
      const T* xhat = cache.normalized.plane(i, c);
      for (std::size_t j = 0; j < plane; ++j) {
        sum_up += up[j];
        sum_up_xhat += static_cast<double>(up[j]) * xhat[j];
      }
    }
    g.beta[c] = static_cast<T>(sum_up);
    g.gamma[c] = static_cast<T>(sum_up_xhat);

    // dx = gamma * inv_std / N * (N*dy - sum(dy) - xhat * sum(dy*xhat))
    const double scale = static_cast<double>(layer.gamma[c]) * cache.inv_std[c] / count;
    for (std::size_t i = 0; i < s.n; ++i) {
      const T* up = upstream.plane(i, c);
      const T* xhat = cache.normalized.plane(i, c);
      T* dx = g.input.plane(i, c);
      for (std::size_t j = 0; j < plane; ++j)
        dx[j] = static_cast<T>(scale * (count * up[j] - sum_up - xhat[j] * sum_up_xhat));
    }
  });
  return g;
}

template <typename T>
BasicTensor4<T> relu_forward(const BasicTensor4<T>& x) {
  return map_elementwise(x, [](T v) { return v > T(0) ? v : T(0); });
}

template <typename T>
BasicTensor4<T> relu_backward(const BasicTensor4<T>& x, const BasicTensor4<T>& upstream) {
  require_shape(x.shape() == upstream.shape(), "relu_backward: shape mismatch " +
                                                   to_string(x.shape()) + " vs " +
                                                   to_string(upstream.shape()));
  BasicTensor4<T> out(x.shape());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = x[j] > T(0) ? upstream[j] : T(0);
  return out;
}

template <typename T>
std::vector<T> dense_forward(const BasicTensor2<T>& x, const DenseLayer<T>& layer) {
  require_shape(layer.weights.cols() == 1, "dense: output width must be 1");
  require_shape(x.cols() == layer.in_features(),
                "dense: input has " + std::to_string(x.cols()) + " features, layer expects " +
                    std::to_string(layer.in_features()));
  std::vector<T> logits(x.rows());
  const T* w = layer.weights.data().data();
  parallel_for(x.rows(), [&](std::size_t i) {
    const T* row = x.row(i);
    T acc = T(0);
    for (std::size_t j = 0; j < x.cols(); ++j) acc += row[j] * w[j];
    logits[i] = acc + layer.bias;
  });
  return logits;
}

template <typename T>
DenseGradients<T> dense_backward(const BasicTensor2<T>& x, const DenseLayer<T>& layer,
                                 std::span<const T> dlogits) {
  require_shape(x.cols() == layer.in_features(), "dense_backward: feature mismatch");
  require_shape(dlogits.size() == x.rows(), "dense_backward: upstream length " +
                                                std::to_string(dlogits.size()) + " != batch " +
                                                std::to_string(x.rows()));
  DenseGradients<T> g;
  g.weights = BasicTensor2<T>(layer.weights.shape());
  g.input = BasicTensor2<T>(x.shape());
  const std::size_t d = x.cols();
  const T* w = layer.weights.data().data();
  T* gw = g.weights.data().data();
  T bias = T(0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const T up = dlogits[i];
    const T* row = x.row(i);
    T* din = g.input.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      gw[j] += row[j] * up;
      din[j] = w[j] * up;
    }
    bias += up;
  }
  g.bias = bias;
  return g;
}

template <typename T>
std::vector<T> sigmoid(std::span<const T> logits) {
  const T lo = static_cast<T>(kProbabilityClamp);
  const T hi = T(1) - static_cast<T>(kProbabilityClamp);
  std::vector<T> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const T z = logits[i];
    // Branches keep exp() from overflowing for large |z|.
    const T v = z >= T(0) ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
    p[i] = std::clamp(v, lo, hi);
  }
  return p;
}

template <typename T>
BceResult<T> bce_loss(std::span<const T> probabilities, std::span<const int> labels) {
  if (probabilities.empty()) fail(ErrorKind::Contract, "bce_loss: empty input");
  if (probabilities.size() != labels.size())
    fail(ErrorKind::Contract, "bce_loss: " + std::to_string(probabilities.size()) +
                                  " probabilities vs " + std::to_string(labels.size()) +
                                  " labels");
  const double n = static_cast<double>(probabilities.size());
  BceResult<T> r;
  r.dlogits.resize(probabilities.size());
  double total = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const int y = labels[i];
    if (y != 0 && y != 1)
      fail(ErrorKind::Contract, "bce_loss: label " + std::to_string(y) + " at index " +
                                    std::to_string(i) + " is not 0 or 1");
    const double p = probabilities[i];
    total += y == 1 ? -std::log(p) : -std::log(1.0 - p);
    r.dlogits[i] = static_cast<T>((p - y) / n);
  }
  r.loss = total / n;
  return r;
}

#define FORGENET_INSTANTIATE_LAYERS(T)                                                       \
  template struct BatchNormLayer<T>;                                                         \
  template BasicTensor4<T> conv2d_forward(const BasicTensor4<T>&, const ConvLayer<T>&);      \
  template ConvGradients<T> conv2d_backward(const BasicTensor4<T>&, const ConvLayer<T>&,     \
                                            const BasicTensor4<T>&);                         \
  template BatchNormResult<T> batchnorm_forward(const BasicTensor4<T>&, BatchNormLayer<T>&,  \
                                                Mode);                                       \
  template BasicTensor4<T> batchnorm_inference(const BasicTensor4<T>&,                       \
                                               const BatchNormLayer<T>&);                    \
  template BatchNormGradients<T> batchnorm_backward(                                         \
      const BatchNormCache<T>&, const BatchNormLayer<T>&, const BasicTensor4<T>&);           \
  template BasicTensor4<T> relu_forward(const BasicTensor4<T>&);                             \
  template BasicTensor4<T> relu_backward(const BasicTensor4<T>&, const BasicTensor4<T>&);    \
  template std::vector<T> dense_forward(const BasicTensor2<T>&, const DenseLayer<T>&);       \
  template DenseGradients<T> dense_backward(const BasicTensor2<T>&, const DenseLayer<T>&,    \
                                            std::span<const T>);                             \
  template std::vector<T> sigmoid(std::span<const T>);                                       \
  template BceResult<T> bce_loss(std::span<const T>, std::span<const int>);

FORGENET_INSTANTIATE_LAYERS(float)
FORGENET_INSTANTIATE_LAYERS(double)

#undef FORGENET_INSTANTIATE_LAYERS

}  // namespace forgenet
