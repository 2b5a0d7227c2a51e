#include "radarfuse/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radarfuse {

ClassWeights class_weights(std::size_t n_pos, std::size_t n_neg, bool invert) {
  if (n_pos + n_neg == 0) {
    throw std::invalid_argument("class_weights: no labeled entries");
  }
  const double total = static_cast<double>(n_pos + n_neg);
  ClassWeights w{static_cast<double>(n_pos) / total, static_cast<double>(n_neg) / total};
  if (invert) std::swap(w.positive, w.negative);
  return w;
}

template <typename T>
BceResult<T> weighted_bce_loss(const Tensor<T>& probabilities,
                               const std::vector<std::uint8_t>& targets,
                               const std::vector<double>& weights) {
  const std::int64_t n = probabilities.numel();
  if (static_cast<std::int64_t>(targets.size()) != n ||
      static_cast<std::int64_t>(weights.size()) != n) {
    throw std::invalid_argument("weighted_bce_loss: predictions, targets and weights disagree");
  }
  constexpr double kClamp = 1e-7;
  BceResult<T> result;
  result.grad_logits = Tensor<T>(probabilities.shape());
  for (std::int64_t i = 0; i < n; ++i) {
    const double p = static_cast<double>(probabilities[i]);
    const double pc = std::clamp(p, kClamp, 1.0 - kClamp);
    const double y = targets[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    const double w = weights[static_cast<std::size_t>(i)];
    result.loss += w * (-y * std::log(pc) - (1.0 - y) * std::log(1.0 - pc));
    result.grad_logits[i] = static_cast<T>(w * (p - y));
  }
  return result;
}

template <typename T>
ConsistencyEvaluator<T>::ConsistencyEvaluator(int feature_channels, int hidden,
                                              std::string param_prefix)
    : feature_channels_(feature_channels),
      fc1_(feature_channels + 1, hidden, param_prefix + "fc1"),
      fc2_(hidden, hidden, param_prefix + "fc2"),
      fc3_(hidden, 1, param_prefix + "fc3") {
  if (feature_channels < 1 || hidden < 1) {
    throw std::invalid_argument("consistency evaluator: channel and hidden sizes must be >= 1");
  }
}

template <typename T>
void ConsistencyEvaluator<T>::init(Rng& rng) {
  fc1_.init(rng);
  fc2_.init(rng);
  fc3_.init(rng);
}

template <typename T>
Tensor<T> ConsistencyEvaluator<T>::forward(const Tensor<T>& x) {
  if (x.rank() != 2 || x.shape()[1] != input_features()) {
    throw std::invalid_argument("consistency evaluator: input must be (N," +
                                std::to_string(input_features()) + "), got " + nn::shape_string(x.shape()));
  }
  relu1_in_ = fc1_.forward(x);
  relu2_in_ = fc2_.forward(nn::relu_forward(relu1_in_));
  Tensor<T> probs = nn::sigmoid_forward(fc3_.forward(nn::relu_forward(relu2_in_)));
  // Keep probabilities strictly inside (0,1) even where the sigmoid saturates
  // past representable precision; mirrors the loss-side clamp.
  constexpr T kClamp = static_cast<T>(1e-7);
  for (std::int64_t i = 0; i < probs.numel(); ++i) {
    probs[i] = std::clamp(probs[i], kClamp, static_cast<T>(1) - kClamp);
  }
  return probs;
}

template <typename T>
Tensor<T> ConsistencyEvaluator<T>::backward_from_logits(const Tensor<T>& grad_logits) {
  Tensor<T> g = fc3_.backward(grad_logits);
  g = fc2_.backward(nn::relu_backward(relu2_in_, g));
  return fc1_.backward(nn::relu_backward(relu1_in_, g));
}

template <typename T>
void ConsistencyEvaluator<T>::zero_grads() {
  fc1_.zero_grads();
  fc2_.zero_grads();
  fc3_.zero_grads();
}

template <typename T>
void ConsistencyEvaluator<T>::collect_params(std::vector<nn::ParamRef<T>>& out) {
  fc1_.collect_params(out);
  fc2_.collect_params(out);
  fc3_.collect_params(out);
}

template struct BceResult<float>;
template struct BceResult<double>;
template BceResult<float> weighted_bce_loss(const Tensor<float>&,
                                            const std::vector<std::uint8_t>&,
                                            const std::vector<double>&);
template BceResult<double> weighted_bce_loss(const Tensor<double>&,
                                             const std::vector<std::uint8_t>&,
                                             const std::vector<double>&);
template class ConsistencyEvaluator<float>;
template class ConsistencyEvaluator<double>;

}  // namespace radarfuse
