#include "radarfuse/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace radarfuse::nn {

template <typename T>
void adam_step(std::span<const ParamRef<T>> params, AdamState<T>& state) {
  std::vector<const ParamRef<T>*> trainable;
  for (const auto& p : params) {
    if (p.trainable) trainable.push_back(&p);
  }
  if (state.m.empty()) {
    for (const auto* p : trainable) {
      state.m.emplace_back(p->value->shape());
      state.v.emplace_back(p->value->shape());
    }
  }
  if (state.m.size() != trainable.size()) {
    throw std::runtime_error("adam_step: parameter list changed size");
  }
  // validate all gradients before touching any parameter
  for (const auto* p : trainable) {
    if (!p->grad->same_shape(*p->value)) {
      throw std::runtime_error("adam_step: gradient shape mismatch for " + p->name);
    }
    if (!p->grad->all_finite()) {
      throw std::runtime_error("adam_step: non-finite gradient for " + p->name);
    }
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < trainable.size(); ++i) {
    Tensor<T>& value = *trainable[i]->value;
    const Tensor<T>& grad = *trainable[i]->grad;
    Tensor<T>& m = state.m[i];
    Tensor<T>& v = state.v[i];
    for (std::int64_t j = 0; j < value.numel(); ++j) {
      const double g = grad[j];
      const double mj = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      const double vj = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double m_hat = mj / bc1;
      const double v_hat = vj / bc2;
      value[j] = static_cast<T>(value[j] - state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon));
    }
  }
}

template void adam_step<float>(std::span<const ParamRef<float>>, AdamState<float>&);
template void adam_step<double>(std::span<const ParamRef<double>>, AdamState<double>&);

}  // namespace radarfuse::nn
