#pragma once

#include <string>
#include <vector>

#include "radarfuse/layers.hpp"
#include "radarfuse/rng.hpp"
#include "radarfuse/tensor.hpp"

namespace radarfuse {

using nn::Tensor;

// Per-pixel normalized coordinates, channel 0 = x = j/(W-1), channel 1 = y =
// i/(H-1). Appending these breaks translation equivariance on purpose: the
// network can learn row-dependent depth priors.
template <typename T>
Tensor<T> make_coord_map(int width, int height);

// The three input planes the extractor consumes. Image is 1 or 3 channels in
// [0,1]; flow is 2 channels in pixels (all-zero when no second frame exists);
// coords comes from make_coord_map.
template <typename T>
struct ExtractorInput {
  Tensor<T> image;
  Tensor<T> flow;
  Tensor<T> coords;

  // Channel concatenation [image, flow, coords]; validates that all planes
  // share W and H and have the advertised channel counts.
  Tensor<T> packed() const;
};

// Fully convolutional encoder/decoder producing a feature map at input
// resolution. Two 2x2 pools are mirrored by two nearest x2 upsamples, so
// input W and H must be divisible by 4 (checked on every forward call).
//
// stem  conv3x3 in->16, BN, ReLU
// down1 [conv3x3 16->32, BN, ReLU] [conv3x3 32->32, BN, ReLU] maxpool2
// down2 [conv3x3 32->64, BN, ReLU] [conv3x3 64->64, BN, ReLU] maxpool2
// mid   conv3x3 64->64, BN, ReLU
// up1   upsample x2, conv3x3 64->32, BN, ReLU
// up2   upsample x2, conv3x3 32->32, BN, ReLU
// head  conv1x1 32->feature_channels
template <typename T>
class FeatureExtractor {
 public:
  FeatureExtractor(int in_channels, int feature_channels, std::string param_prefix = "");

  void init(Rng& rng);

  Tensor<T> forward(const Tensor<T>& x, bool training);
  // Propagates back through the cached forward pass, accumulating parameter
  // gradients; returns the gradient w.r.t. the packed input.
  Tensor<T> backward(const Tensor<T>& grad_out);

  void zero_grads();
  void collect_params(std::vector<nn::ParamRef<T>>& out);

  int in_channels() const { return in_channels_; }
  int feature_channels() const { return feature_channels_; }

 private:
  int in_channels_, feature_channels_;

  nn::Conv2d<T> stem_;
  nn::BatchNorm2d<T> stem_bn_;
  nn::Conv2d<T> down1a_, down1b_;
  nn::BatchNorm2d<T> down1a_bn_, down1b_bn_;
  nn::Conv2d<T> down2a_, down2b_;
  nn::BatchNorm2d<T> down2a_bn_, down2b_bn_;
  nn::Conv2d<T> mid_;
  nn::BatchNorm2d<T> mid_bn_;
  nn::Conv2d<T> up1_, up2_;
  nn::BatchNorm2d<T> up1_bn_, up2_bn_;
  nn::Conv2d<T> head_;

  // Saved activations needed by backward: pre-ReLU tensors in forward order
  // plus pooling bookkeeping.
  std::vector<Tensor<T>> relu_inputs_;
  std::vector<int> pool1_argmax_, pool2_argmax_;
  std::vector<int> pool1_in_shape_, pool2_in_shape_;
};

extern template Tensor<float> make_coord_map<float>(int, int);
extern template Tensor<double> make_coord_map<double>(int, int);
extern template struct ExtractorInput<float>;
extern template struct ExtractorInput<double>;
extern template class FeatureExtractor<float>;
extern template class FeatureExtractor<double>;

}  // namespace radarfuse
