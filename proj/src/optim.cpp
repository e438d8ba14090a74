#include "forgenet/optim.hpp"

#include <cmath>
#include <string>

#include "forgenet/error.hpp"
#include "forgenet/tensor.hpp"

namespace forgenet {

template <typename T>
void adam_step(std::span<const std::span<T>> params,
               std::span<const std::span<const T>> grads, AdamState<T>& state) {
  if (params.size() != grads.size())
    fail(ErrorKind::Contract, "adam: " + std::to_string(params.size()) +
                                  " parameter groups vs " + std::to_string(grads.size()) +
                                  " gradient groups");
  const bool fresh = state.m.empty() && state.v.empty();
  if (!fresh && (state.m.size() != params.size() || state.v.size() != params.size()))
    fail(ErrorKind::Contract, "adam: state has " + std::to_string(state.m.size()) +
                                  " groups, parameters have " + std::to_string(params.size()));
  for (std::size_t g = 0; g < params.size(); ++g) {
    if (params[g].size() != grads[g].size())
      fail(ErrorKind::Contract, "adam: group " + std::to_string(g) + " has " +
                                    std::to_string(params[g].size()) + " parameters but " +
                                    std::to_string(grads[g].size()) + " gradients");
    if (!fresh && (state.m[g].size() != params[g].size() || state.v[g].size() != params[g].size()))
      fail(ErrorKind::Contract, "adam: moment shape mismatch in group " + std::to_string(g));
    if (!all_finite(grads[g]))
      fail(ErrorKind::PoisonedGradient,
           "adam: non-finite gradient in group " + std::to_string(g) + "; update refused");
  }

  if (fresh) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t g = 0; g < params.size(); ++g) {
      state.m[g].assign(params[g].size(), T(0));
      state.v[g].assign(params[g].size(), T(0));
    }
  }

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double b1 = state.beta1, b2 = state.beta2;
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);

  for (std::size_t g = 0; g < params.size(); ++g) {
    std::span<T> theta = params[g];
    std::span<const T> grad = grads[g];
    std::vector<T>& m = state.m[g];
    std::vector<T>& v = state.v[g];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double gj = grad[j];
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double m_hat = mj / correction1;
      const double v_hat = vj / correction2;
      theta[j] = static_cast<T>(theta[j] - state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
  }
}

template void adam_step<float>(std::span<const std::span<float>>,
                               std::span<const std::span<const float>>, AdamState<float>&);
template void adam_step<double>(std::span<const std::span<double>>,
                                std::span<const std::span<const double>>, AdamState<double>&);

}  // namespace forgenet
