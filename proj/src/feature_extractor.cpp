#include "radarfuse/feature_extractor.hpp"

#include <stdexcept>
#include <utility>

namespace radarfuse {

template <typename T>
Tensor<T> make_coord_map(int width, int height) {
  if (width < 2 || height < 2) {
    throw std::invalid_argument("make_coord_map: width and height must be at least 2");
  }
  Tensor<T> map({2, height, width});
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      map(0, i, j) = static_cast<T>(static_cast<double>(j) / (width - 1));
      map(1, i, j) = static_cast<T>(static_cast<double>(i) / (height - 1));
    }
  }
  return map;
}

template <typename T>
Tensor<T> ExtractorInput<T>::packed() const {
  if (image.rank() != 3 || (image.shape()[0] != 1 && image.shape()[0] != 3)) {
    throw std::invalid_argument("extractor input: image must have 1 or 3 channels");
  }
  if (flow.rank() != 3 || flow.shape()[0] != 2) {
    throw std::invalid_argument("extractor input: flow must have 2 channels");
  }
  if (coords.rank() != 3 || coords.shape()[0] != 2) {
    throw std::invalid_argument("extractor input: coords must have 2 channels");
  }
  const int h = image.shape()[1], w = image.shape()[2];
  for (const Tensor<T>* plane : {&flow, &coords}) {
    if (plane->shape()[1] != h || plane->shape()[2] != w) {
      throw std::invalid_argument("extractor input: planes disagree on spatial size");
    }
  }
  const int channels = image.shape()[0] + 4;
  Tensor<T> out({channels, h, w});
  std::int64_t offset = 0;
  for (const Tensor<T>* plane : {&image, &flow, &coords}) {
    for (std::int64_t i = 0; i < plane->numel(); ++i) out[offset + i] = (*plane)[i];
    offset += plane->numel();
  }
  return out;
}

template <typename T>
FeatureExtractor<T>::FeatureExtractor(int in_channels, int feature_channels,
                                      std::string param_prefix)
    : in_channels_(in_channels),
      feature_channels_(feature_channels),
      stem_(in_channels, 16, 3, 1, 1, param_prefix + "stem"),
      stem_bn_(16, param_prefix + "stem_bn"),
      down1a_(16, 32, 3, 1, 1, param_prefix + "down1a"),
      down1b_(32, 32, 3, 1, 1, param_prefix + "down1b"),
      down1a_bn_(32, param_prefix + "down1a_bn"),
      down1b_bn_(32, param_prefix + "down1b_bn"),
      down2a_(32, 64, 3, 1, 1, param_prefix + "down2a"),
      down2b_(64, 64, 3, 1, 1, param_prefix + "down2b"),
      down2a_bn_(64, param_prefix + "down2a_bn"),
      down2b_bn_(64, param_prefix + "down2b_bn"),
      mid_(64, 64, 3, 1, 1, param_prefix + "mid"),
      mid_bn_(64, param_prefix + "mid_bn"),
      up1_(64, 32, 3, 1, 1, param_prefix + "up1"),
      up2_(32, 32, 3, 1, 1, param_prefix + "up2"),
      up1_bn_(32, param_prefix + "up1_bn"),
      up2_bn_(32, param_prefix + "up2_bn"),
      head_(32, feature_channels, 1, 1, 0, param_prefix + "head") {
  if (in_channels < 1) throw std::invalid_argument("feature extractor: in_channels must be >= 1");
  if (feature_channels < 1) {
    throw std::invalid_argument("feature extractor: feature_channels must be >= 1");
  }
}

template <typename T>
void FeatureExtractor<T>::init(Rng& rng) {
  for (nn::Conv2d<T>* conv : {&stem_, &down1a_, &down1b_, &down2a_, &down2b_, &mid_, &up1_, &up2_,
                              &head_}) {
    conv->init(rng);
  }
}

template <typename T>
Tensor<T> FeatureExtractor<T>::forward(const Tensor<T>& x, bool training) {
  if (x.rank() != 3 || x.shape()[0] != in_channels_) {
    throw std::invalid_argument("feature extractor: input must be (" +
                                std::to_string(in_channels_) + ",H,W), got " + nn::shape_string(x.shape()));
  }
  const int h = x.shape()[1], w = x.shape()[2];
  if (h % 4 != 0 || w % 4 != 0) {
    throw std::invalid_argument(
        "feature extractor: spatial dims must be divisible by 4 to round-trip two pooling "
        "stages, got " +
        nn::shape_string(x.shape()));
  }
  relu_inputs_.clear();
  relu_inputs_.reserve(8);
  auto act = [&](Tensor<T> t) {
    relu_inputs_.push_back(std::move(t));
    return nn::relu_forward(relu_inputs_.back());
  };

  Tensor<T> t = act(stem_bn_.forward(stem_.forward(x), training));
  t = act(down1a_bn_.forward(down1a_.forward(t), training));
  t = act(down1b_bn_.forward(down1b_.forward(t), training));
  pool1_in_shape_ = t.shape();
  t = nn::maxpool2_forward(t, pool1_argmax_);
  t = act(down2a_bn_.forward(down2a_.forward(t), training));
  t = act(down2b_bn_.forward(down2b_.forward(t), training));
  pool2_in_shape_ = t.shape();
  t = nn::maxpool2_forward(t, pool2_argmax_);
  t = act(mid_bn_.forward(mid_.forward(t), training));
  t = act(up1_bn_.forward(up1_.forward(nn::upsample_nearest2_forward(t)), training));
  t = act(up2_bn_.forward(up2_.forward(nn::upsample_nearest2_forward(t)), training));
  t = head_.forward(t);

  if (t.shape()[1] != h || t.shape()[2] != w) {
    throw std::logic_error("feature extractor: output resolution drifted from input");
  }
  return t;
}

template <typename T>
Tensor<T> FeatureExtractor<T>::backward(const Tensor<T>& grad_out) {
  if (relu_inputs_.size() != 8) {
    throw std::logic_error("feature extractor: backward called without a cached forward pass");
  }
  auto relu_grad = [&](int idx, const Tensor<T>& g) {
    return nn::relu_backward(relu_inputs_[static_cast<std::size_t>(idx)], g);
  };

  Tensor<T> g = head_.backward(grad_out);
  g = nn::upsample_nearest2_backward(up2_.backward(up2_bn_.backward(relu_grad(7, g))));
  g = nn::upsample_nearest2_backward(up1_.backward(up1_bn_.backward(relu_grad(6, g))));
  g = mid_.backward(mid_bn_.backward(relu_grad(5, g)));
  g = nn::maxpool2_backward(pool2_in_shape_, pool2_argmax_, g);
  g = down2b_.backward(down2b_bn_.backward(relu_grad(4, g)));
  g = down2a_.backward(down2a_bn_.backward(relu_grad(3, g)));
  g = nn::maxpool2_backward(pool1_in_shape_, pool1_argmax_, g);
  g = down1b_.backward(down1b_bn_.backward(relu_grad(2, g)));
  g = down1a_.backward(down1a_bn_.backward(relu_grad(1, g)));
  g = stem_.backward(stem_bn_.backward(relu_grad(0, g)));
  return g;
}

template <typename T>
void FeatureExtractor<T>::zero_grads() {
  for (nn::Conv2d<T>* conv : {&stem_, &down1a_, &down1b_, &down2a_, &down2b_, &mid_, &up1_, &up2_,
                              &head_}) {
    conv->zero_grads();
  }
  for (nn::BatchNorm2d<T>* bn : {&stem_bn_, &down1a_bn_, &down1b_bn_, &down2a_bn_, &down2b_bn_,
                                 &mid_bn_, &up1_bn_, &up2_bn_}) {
    bn->zero_grads();
  }
}

template <typename T>
void FeatureExtractor<T>::collect_params(std::vector<nn::ParamRef<T>>& out) {
  stem_.collect_params(out);
  stem_bn_.collect_params(out);
  down1a_.collect_params(out);
  down1a_bn_.collect_params(out);
  down1b_.collect_params(out);
  down1b_bn_.collect_params(out);
  down2a_.collect_params(out);
  down2a_bn_.collect_params(out);
  down2b_.collect_params(out);
  down2b_bn_.collect_params(out);
  mid_.collect_params(out);
  mid_bn_.collect_params(out);
  up1_.collect_params(out);
  up1_bn_.collect_params(out);
  up2_.collect_params(out);
  up2_bn_.collect_params(out);
  head_.collect_params(out);
}

template Tensor<float> make_coord_map<float>(int, int);
template Tensor<double> make_coord_map<double>(int, int);
template struct ExtractorInput<float>;
template struct ExtractorInput<double>;
template class FeatureExtractor<float>;
template class FeatureExtractor<double>;

}  // namespace radarfuse
