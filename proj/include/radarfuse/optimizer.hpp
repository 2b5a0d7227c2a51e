#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "radarfuse/layers.hpp"
#include "radarfuse/tensor.hpp"

namespace radarfuse::nn {

// Adam with bias correction. Moment slots are allocated on the first step in
// the order the trainable parameters appear; that order must stay fixed for
// the lifetime of the state.
template <typename T>
struct AdamState {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;

  std::vector<Tensor<T>> m, v;  // first/second moments, trainable params only
};

// Applies one update in place. Throws std::runtime_error naming the offending
// parameter when a gradient is non-finite; no parameter is modified in that
// case.
template <typename T>
void adam_step(std::span<const ParamRef<T>> params, AdamState<T>& state);

}  // namespace radarfuse::nn
