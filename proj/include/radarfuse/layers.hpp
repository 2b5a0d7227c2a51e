#pragma once

#include <string>
#include <vector>

#include "radarfuse/rng.hpp"
#include "radarfuse/tensor.hpp"

namespace radarfuse::nn {

// Named handle to one learnable (or tracked) tensor and its gradient slot.
// Networks emit these in a fixed order; the optimizer and the checkpoint
// format both rely on that order.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;   // null for non-trainable (running statistics)
  bool trainable = true;
};

// ---------------------------------------------------------------------------
// Kernel functions. Forward passes are plain cross-correlation / reduction
// definitions; each backward returns exact analytic gradients.
// ---------------------------------------------------------------------------

template <typename T>
struct Conv2dGrads {
  Tensor<T> input, weight, bias;
};

// x: (IC,H,W), w: (OC,IC,kh,kw), b: (OC)
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                         int pad, const std::string& layer = "conv2d");
template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out,
                               int stride, int pad, const std::string& layer = "conv2d");

struct BatchNormCache {
  std::vector<double> mean, inv_std;
};

// Per-channel normalization over the spatial extent (single-image batches).
// In training mode the batch statistics are used and the running statistics
// are updated in place; in inference mode the map is affine in x.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                            BatchNormCache& cache, double momentum = 0.9, double eps = 1e-5);

template <typename T>
struct BatchNormGrads {
  Tensor<T> input, gamma, beta;
};
template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                                     const Tensor<T>& grad_out, const BatchNormCache& cache,
                                     bool training);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

// 2x2 window, stride 2; even spatial dims required. Ties go to the first
// occurrence in scan order.
template <typename T>
Tensor<T> maxpool2_forward(const Tensor<T>& x, std::vector<int>& argmax);
template <typename T>
Tensor<T> maxpool2_backward(const std::vector<int>& x_shape, const std::vector<int>& argmax,
                            const Tensor<T>& grad_out);

template <typename T>
Tensor<T> upsample_nearest2_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> upsample_nearest2_backward(const Tensor<T>& grad_out);

// x: (N,FI), w: (FO,FI), b: (FO) -> (N,FO)
template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         const std::string& layer = "linear");
template <typename T>
struct LinearGrads {
  Tensor<T> input, weight, bias;
};
template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out,
                               const std::string& layer = "linear");

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& x);
// Takes the forward output, not the input.
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& grad_out);

// ---------------------------------------------------------------------------
// Stateful layers used to assemble the networks. Each caches what its
// backward pass needs and accumulates parameter gradients until zero_grads().
// ---------------------------------------------------------------------------

template <typename T>
class Conv2d {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, std::string name);

  void init(Rng& rng);  // Kaiming-uniform weights, zero bias
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void zero_grads();
  void collect_params(std::vector<ParamRef<T>>& out);

  Tensor<T> weight, bias, grad_weight, grad_bias;

 private:
  int stride_, pad_;
  std::string name_;
  Tensor<T> cached_input_;
};

template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d(int channels, std::string name);

  Tensor<T> forward(const Tensor<T>& x, bool training);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void zero_grads();
  void collect_params(std::vector<ParamRef<T>>& out);

  Tensor<T> gamma, beta, grad_gamma, grad_beta;
  Tensor<T> running_mean, running_var;

 private:
  std::string name_;
  Tensor<T> cached_input_;
  BatchNormCache cache_;
  bool cached_training_ = true;
};

template <typename T>
class Linear {
 public:
  Linear(int in_features, int out_features, std::string name);

  void init(Rng& rng);
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& grad_out);
  void zero_grads();
  void collect_params(std::vector<ParamRef<T>>& out);

  Tensor<T> weight, bias, grad_weight, grad_bias;

 private:
  std::string name_;
  Tensor<T> cached_input_;
};

}  // namespace radarfuse::nn
