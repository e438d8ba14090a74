#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace forgenet {

/// Adam moments for a list of parameter groups. Moments are allocated on the
/// first step, sized after the groups they are applied to.
template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::uint64_t t = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update. Validates every gradient before touching
// any parameter: a shape mismatch is a contract error and a non-finite
// gradient is a poisoned-gradient error; in both cases nothing changes.
template <typename T>
void adam_step(std::span<const std::span<T>> params,
               std::span<const std::span<const T>> grads, AdamState<T>& state);

extern template void adam_step<float>(std::span<const std::span<float>>,
                                      std::span<const std::span<const float>>,
                                      AdamState<float>&);
extern template void adam_step<double>(std::span<const std::span<double>>,
                                       std::span<const std::span<const double>>,
                                       AdamState<double>&);

}  // namespace forgenet
