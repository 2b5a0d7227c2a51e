#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radarfuse/layers.hpp"
#include "radarfuse/rng.hpp"
#include "radarfuse/tensor.hpp"

namespace radarfuse {

using nn::Tensor;

// Per-class loss weights. The printed form weights each class by its own
// share of the labels, n_pos/(n_pos+n_neg) for positives. That emphasizes
// the majority class; `invert` swaps the two for the conventional balancing.
struct ClassWeights {
  double positive = 0.0;
  double negative = 0.0;
};

ClassWeights class_weights(std::size_t n_pos, std::size_t n_neg, bool invert = false);

template <typename T>
struct BceResult {
  double loss = 0.0;          // summed over entries, not averaged
  Tensor<T> grad_logits;      // per entry, w * (p - y)
};

// Weighted binary cross entropy over one image's labeled entries.
// Probabilities are clamped to [1e-7, 1-1e-7] before the logs; the logit
// gradient uses the unclamped probabilities.
template <typename T>
BceResult<T> weighted_bce_loss(const Tensor<T>& probabilities,
                               const std::vector<std::uint8_t>& targets,
                               const std::vector<double>& weights);

// Scores depth candidates for image consistency. Input rows are [v, s]: the
// c-channel feature vector at the candidate's pixel plus the candidate depth
// normalized by d_max. Output is a probability per row.
//
// (c+1) -> hidden -> ReLU -> hidden -> ReLU -> 1 -> sigmoid
template <typename T>
class ConsistencyEvaluator {
 public:
  ConsistencyEvaluator(int feature_channels, int hidden, std::string param_prefix = "");

  void init(Rng& rng);

  // x: (N, c+1). Returns probabilities (N, 1).
  Tensor<T> forward(const Tensor<T>& x);
  // Backpropagates from gradients w.r.t. the pre-sigmoid logits (N, 1),
  // accumulating parameter gradients; returns the gradient w.r.t. x.
  Tensor<T> backward_from_logits(const Tensor<T>& grad_logits);

  void zero_grads();
  void collect_params(std::vector<nn::ParamRef<T>>& out);

  int feature_channels() const { return feature_channels_; }
  int input_features() const { return feature_channels_ + 1; }

 private:
  int feature_channels_;
  nn::Linear<T> fc1_, fc2_, fc3_;
  Tensor<T> relu1_in_, relu2_in_;
};

extern template struct BceResult<float>;
extern template struct BceResult<double>;
extern template BceResult<float> weighted_bce_loss(const Tensor<float>&,
                                                   const std::vector<std::uint8_t>&,
                                                   const std::vector<double>&);
extern template BceResult<double> weighted_bce_loss(const Tensor<double>&,
                                                    const std::vector<std::uint8_t>&,
                                                    const std::vector<double>&);
extern template class ConsistencyEvaluator<float>;
extern template class ConsistencyEvaluator<double>;

}  // namespace radarfuse
