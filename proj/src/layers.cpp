#include "radarfuse/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radarfuse::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require(bool ok, const std::string& layer, const std::string& what) {
  if (!ok) throw std::invalid_argument(layer + ": " + what);
}

int conv_out_dim(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

// Patch matrix, K = IC*kh*kw rows by N = OH*OW columns, row-major so each
// kernel tap's row is contiguous and stride-1 rows fill with block copies.
template <typename T>
RowMat<T> im2col(const Tensor<T>& x, int kh, int kw, int stride, int pad, int oh, int ow) {
  const int ic = x.dim(0), h = x.dim(1), w = x.dim(2);
  RowMat<T> cols(ic * kh * kw, oh * ow);
  if (stride == 1) {
    for (int c = 0; c < ic; ++c) {
      for (int dy = 0; dy < kh; ++dy) {
        for (int dx = 0; dx < kw; ++dx) {
          T* dst = cols.row((c * kh + dy) * kw + dx).data();
          const int x0 = std::min(std::max(0, pad - dx), ow);
          const int x1 = std::max(std::min(ow, w + pad - dx), x0);
          for (int oy = 0; oy < oh; ++oy, dst += ow) {
            const int y = oy + dy - pad;
            if (y < 0 || y >= h) {
              std::fill(dst, dst + ow, T(0));
              continue;
            }
            std::fill(dst, dst + x0, T(0));
            if (x1 > x0) {
              const T* src = &x(c, y, x0 + dx - pad);
              std::copy(src, src + (x1 - x0), dst + x0);
            }
            std::fill(dst + x1, dst + ow, T(0));
          }
        }
      }
    }
    return cols;
  }
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const int n = oy * ow + ox;
      int k = 0;
      for (int c = 0; c < ic; ++c) {
        for (int dy = 0; dy < kh; ++dy) {
          const int y = oy * stride + dy - pad;
          if (y < 0 || y >= h) {
            for (int dx = 0; dx < kw; ++dx) cols(k++, n) = T(0);
            continue;
          }
          const T* row = &x(c, y, 0);
          for (int dx = 0; dx < kw; ++dx) {
            const int xx = ox * stride + dx - pad;
            cols(k++, n) = (xx >= 0 && xx < w) ? row[xx] : T(0);
          }
        }
      }
    }
  }
  return cols;
}

template <typename T>
void col2im_add(const RowMat<T>& cols, Tensor<T>& x, int kh, int kw, int stride, int pad, int oh,
                int ow) {
  const int ic = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (stride == 1) {
    for (int c = 0; c < ic; ++c) {
      for (int dy = 0; dy < kh; ++dy) {
        for (int dx = 0; dx < kw; ++dx) {
          const T* src = cols.row((c * kh + dy) * kw + dx).data();
          const int x0 = std::min(std::max(0, pad - dx), ow);
          const int x1 = std::max(std::min(ow, w + pad - dx), x0);
          if (x1 == x0) continue;
          const int len = x1 - x0;
          for (int oy = 0; oy < oh; ++oy) {
            const int y = oy + dy - pad;
            if (y < 0 || y >= h) continue;
            Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(&x(c, y, x0 + dx - pad), len) +=
                Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(src + oy * ow + x0, len);
          }
        }
      }
    }
    return;
  }
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const int n = oy * ow + ox;
      int k = 0;
      for (int c = 0; c < ic; ++c) {
        for (int dy = 0; dy < kh; ++dy) {
          const int y = oy * stride + dy - pad;
          if (y < 0 || y >= h) {
            k += kw;
            continue;
          }
          T* row = &x(c, y, 0);
          for (int dx = 0; dx < kw; ++dx) {
            const int xx = ox * stride + dx - pad;
            if (xx >= 0 && xx < w) row[xx] += cols(k, n);
            ++k;
          }
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                         int pad, const std::string& layer) {
  require(x.rank() == 3, layer, "input must be (C,H,W), got " + shape_string(x.shape()));
  require(w.rank() == 4, layer, "weight must be (OC,IC,kh,kw), got " + shape_string(w.shape()));
  const int oc = w.shape()[0], ic = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
  require(x.dim(0) == ic, layer,
          "input channels " + std::to_string(x.dim(0)) + " != weight channels " + std::to_string(ic));
  require(b.rank() == 1 && b.dim(0) == oc, layer, "bias shape mismatch");
  const int oh = conv_out_dim(x.dim(1), kh, stride, pad);
  const int ow = conv_out_dim(x.dim(2), kw, stride, pad);
  require(oh > 0 && ow > 0, layer, "kernel larger than padded input");

  Tensor<T> out({oc, oh, ow});
  Eigen::Map<const RowMat<T>> wmat(w.data(), oc, ic * kh * kw);
  Eigen::Map<RowMat<T>> omat(out.data(), oc, oh * ow);
  if (kh == 1 && kw == 1 && stride == 1 && pad == 0) {
    Eigen::Map<const RowMat<T>> xmat(x.data(), ic, oh * ow);
    omat.noalias() = wmat * xmat;
  } else {
    const RowMat<T> cols = im2col(x, kh, kw, stride, pad, oh, ow);
    omat.noalias() = wmat * cols;
  }
  for (int c = 0; c < oc; ++c) omat.row(c).array() += b[c];
  return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out,
                               int stride, int pad, const std::string& layer) {
  const int oc = w.shape()[0], ic = w.shape()[1], kh = w.shape()[2], kw = w.shape()[3];
  const int oh = grad_out.dim(1), ow = grad_out.dim(2);
  require(grad_out.dim(0) == oc, layer, "grad_out channels mismatch");
  require(oh == conv_out_dim(x.dim(1), kh, stride, pad) &&
              ow == conv_out_dim(x.dim(2), kw, stride, pad),
          layer, "grad_out spatial dims mismatch");

  Conv2dGrads<T> grads{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>({oc})};

  Eigen::Map<const RowMat<T>> gmat(grad_out.data(), oc, oh * ow);
  Eigen::Map<RowMat<T>> gw(grads.weight.data(), oc, ic * kh * kw);
  Eigen::Map<const RowMat<T>> wmat(w.data(), oc, ic * kh * kw);

  if (kh == 1 && kw == 1 && stride == 1 && pad == 0) {
    Eigen::Map<const RowMat<T>> xmat(x.data(), ic, oh * ow);
    gw.noalias() = gmat * xmat.transpose();
    Eigen::Map<RowMat<T>> gx(grads.input.data(), ic, oh * ow);
    gx.noalias() = wmat.transpose() * gmat;
  } else {
    const RowMat<T> cols = im2col(x, kh, kw, stride, pad, oh, ow);
    gw.noalias() = gmat * cols.transpose();
    RowMat<T> gcols(ic * kh * kw, oh * ow);
    gcols.noalias() = wmat.transpose() * gmat;
    col2im_add(gcols, grads.input, kh, kw, stride, pad, oh, ow);
  }

  // fixed-order accumulation; Eigen's reduction over a Map peels by
  // alignment, which makes the low bits depend on the allocation
  for (int c = 0; c < oc; ++c) {
    double sum = 0.0;
    for (int i = 0; i < oh * ow; ++i) sum += gmat(c, i);
    grads.bias[c] = static_cast<T>(sum);
  }
  return grads;
}

// ---------------------------------------------------------------------------
// batchnorm
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                            BatchNormCache& cache, double momentum, double eps) {
  require(x.rank() == 3, "batchnorm", "input must be (C,H,W)");
  const int c = x.dim(0);
  require(gamma.dim(0) == c && beta.dim(0) == c, "batchnorm", "parameter channels mismatch");
  const int n = x.dim(1) * x.dim(2);
  Tensor<T> out(x.shape());
  cache.mean.assign(c, 0.0);
  cache.inv_std.assign(c, 0.0);
  for (int ch = 0; ch < c; ++ch) {
    const T* in = &x(ch, 0, 0);
    T* o = &out(ch, 0, 0);
    double mean, var;
    if (training) {
      double sum = 0.0, sq = 0.0;
      for (int i = 0; i < n; ++i) {
        sum += in[i];
        sq += static_cast<double>(in[i]) * in[i];
      }
      mean = sum / n;
      var = sq / n - mean * mean;
      if (var < 0.0) var = 0.0;
      running_mean[ch] = static_cast<T>(momentum * running_mean[ch] + (1.0 - momentum) * mean);
      running_var[ch] = static_cast<T>(momentum * running_var[ch] + (1.0 - momentum) * var);
    } else {
      mean = running_mean[ch];
      var = running_var[ch];
    }
    const double inv_std = 1.0 / std::sqrt(var + eps);
    cache.mean[ch] = mean;
    cache.inv_std[ch] = inv_std;
    const double g = gamma[ch], b = beta[ch];
    for (int i = 0; i < n; ++i) {
      o[i] = static_cast<T>((in[i] - mean) * inv_std * g + b);
    }
  }
  return out;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                                     const Tensor<T>& grad_out, const BatchNormCache& cache,
                                     bool training) {
  const int c = x.dim(0);
  const int n = x.dim(1) * x.dim(2);
  BatchNormGrads<T> grads{Tensor<T>(x.shape()), Tensor<T>({c}), Tensor<T>({c})};
  for (int ch = 0; ch < c; ++ch) {
    const T* in = &x(ch, 0, 0);
    const T* go = &grad_out(ch, 0, 0);
    T* gi = &grads.input(ch, 0, 0);
    const double mean = cache.mean[ch];
    const double inv_std = cache.inv_std[ch];
    double sum_go = 0.0, sum_go_xhat = 0.0;
    for (int i = 0; i < n; ++i) {
      const double xhat = (in[i] - mean) * inv_std;
      sum_go += go[i];
      sum_go_xhat += go[i] * xhat;
    }
    grads.beta[ch] = static_cast<T>(sum_go);
    grads.gamma[ch] = static_cast<T>(sum_go_xhat);
    const double g = gamma[ch];
    if (training) {
      const double mean_go = sum_go / n;
      const double mean_go_xhat = sum_go_xhat / n;
      for (int i = 0; i < n; ++i) {
        const double xhat = (in[i] - mean) * inv_std;
        gi[i] = static_cast<T>(g * inv_std * (go[i] - mean_go - xhat * mean_go_xhat));
      }
    } else {
      for (int i = 0; i < n; ++i) gi[i] = static_cast<T>(g * inv_std * go[i]);
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// elementwise / pooling / resampling
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  Tensor<T> grads(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) grads[i] = x[i] > T(0) ? grad_out[i] : T(0);
  return grads;
}

template <typename T>
Tensor<T> maxpool2_forward(const Tensor<T>& x, std::vector<int>& argmax) {
  require(x.rank() == 3, "maxpool2", "input must be (C,H,W)");
  require(x.dim(1) % 2 == 0 && x.dim(2) % 2 == 0, "maxpool2",
          "spatial dims must be even, got " + shape_string(x.shape()));
  const int c = x.dim(0), oh = x.dim(1) / 2, ow = x.dim(2) / 2;
  Tensor<T> out({c, oh, ow});
  argmax.assign(static_cast<std::size_t>(out.numel()), 0);
  std::int64_t o = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox, ++o) {
        T best = x(ch, 2 * oy, 2 * ox);
        int best_at = 0;
        const int cand[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
        for (int k = 1; k < 4; ++k) {
          const T v = x(ch, 2 * oy + cand[k][0], 2 * ox + cand[k][1]);
          if (v > best) {  // first occurrence wins ties
            best = v;
            best_at = k;
          }
        }
        out[o] = best;
        const int iy = 2 * oy + cand[best_at][0];
        const int ix = 2 * ox + cand[best_at][1];
        argmax[static_cast<std::size_t>(o)] = (ch * x.dim(1) + iy) * x.dim(2) + ix;
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> maxpool2_backward(const std::vector<int>& x_shape, const std::vector<int>& argmax,
                            const Tensor<T>& grad_out) {
  Tensor<T> grads(x_shape);
  for (std::int64_t o = 0; o < grad_out.numel(); ++o) {
    grads[argmax[static_cast<std::size_t>(o)]] += grad_out[o];
  }
  return grads;
}

template <typename T>
Tensor<T> upsample_nearest2_forward(const Tensor<T>& x) {
  require(x.rank() == 3, "upsample_nearest2", "input must be (C,H,W)");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor<T> out({c, 2 * h, 2 * w});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < 2 * h; ++y) {
      const T* src = &x(ch, y / 2, 0);
      T* dst = &out(ch, y, 0);
      for (int xx = 0; xx < 2 * w; ++xx) dst[xx] = src[xx / 2];
    }
  }
  return out;
}

template <typename T>
Tensor<T> upsample_nearest2_backward(const Tensor<T>& grad_out) {
  require(grad_out.dim(1) % 2 == 0 && grad_out.dim(2) % 2 == 0, "upsample_nearest2",
          "grad dims must be even");
  const int c = grad_out.dim(0), h = grad_out.dim(1) / 2, w = grad_out.dim(2) / 2;
  Tensor<T> grads({c, h, w});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < 2 * h; ++y) {
      const T* src = &grad_out(ch, y, 0);
      T* dst = &grads(ch, y / 2, 0);
      for (int xx = 0; xx < 2 * w; ++xx) dst[xx / 2] += src[xx];
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// linear / sigmoid
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         const std::string& layer) {
  require(x.rank() == 2, layer, "input must be (N,F)");
  const int fo = w.dim(0), fi = w.dim(1);
  require(x.dim(1) == fi, layer,
          "input features " + std::to_string(x.dim(1)) + " != weight features " + std::to_string(fi));
  require(b.dim(0) == fo, layer, "bias shape mismatch");
  const int n = x.dim(0);
  Tensor<T> out({n, fo});
  Eigen::Map<const RowMat<T>> xm(x.data(), n, fi);
  Eigen::Map<const RowMat<T>> wm(w.data(), fo, fi);
  Eigen::Map<RowMat<T>> om(out.data(), n, fo);
  om.noalias() = xm * wm.transpose();
  for (int c = 0; c < fo; ++c) om.col(c).array() += b[c];
  return out;
}

template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out,
                               const std::string& layer) {
  const int n = x.dim(0), fi = w.dim(1), fo = w.dim(0);
  require(grad_out.rank() == 2 && grad_out.dim(0) == n && grad_out.dim(1) == fo, layer,
          "grad_out shape mismatch");
  LinearGrads<T> grads{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>({fo})};
  Eigen::Map<const RowMat<T>> xm(x.data(), n, fi);
  Eigen::Map<const RowMat<T>> wm(w.data(), fo, fi);
  Eigen::Map<const RowMat<T>> gm(grad_out.data(), n, fo);
  Eigen::Map<RowMat<T>> gx(grads.input.data(), n, fi);
  Eigen::Map<RowMat<T>> gw(grads.weight.data(), fo, fi);
  gx.noalias() = gm * wm;
  gw.noalias() = gm.transpose() * xm;
  // fixed-order accumulation, same rationale as the conv bias gradient
  for (int c = 0; c < fo; ++c) {
    double sum = 0.0;
    for (int r = 0; r < n; ++r) sum += gm(r, c);
    grads.bias[c] = static_cast<T>(sum);
  }
  return grads;
}

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    out[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(x[i]))));
  }
  return out;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& grad_out) {
  Tensor<T> grads(y.shape());
  for (std::int64_t i = 0; i < y.numel(); ++i) grads[i] = grad_out[i] * y[i] * (T(1) - y[i]);
  return grads;
}

// ---------------------------------------------------------------------------
// stateful layers
// ---------------------------------------------------------------------------

template <typename T>
Conv2d<T>::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad,
                  std::string name)
    : stride_(stride), pad_(pad), name_(std::move(name)) {
  weight = Tensor<T>({out_channels, in_channels, kernel, kernel});
  bias = Tensor<T>({out_channels});
  grad_weight = Tensor<T>(weight.shape());
  grad_bias = Tensor<T>(bias.shape());
}

template <typename T>
void Conv2d<T>::init(Rng& rng) {
  const int fan_in = weight.shape()[1] * weight.shape()[2] * weight.shape()[3];
  const double bound = std::sqrt(6.0 / fan_in);
  for (std::int64_t i = 0; i < weight.numel(); ++i) {
    weight[i] = static_cast<T>(rng.uniform(-bound, bound));
  }
  bias.fill(T(0));
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) {
  cached_input_ = x;
  return conv2d_forward(x, weight, bias, stride_, pad_, name_);
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out) {
  auto grads = conv2d_backward(cached_input_, weight, grad_out, stride_, pad_, name_);
  for (std::int64_t i = 0; i < grad_weight.numel(); ++i) grad_weight[i] += grads.weight[i];
  for (std::int64_t i = 0; i < grad_bias.numel(); ++i) grad_bias[i] += grads.bias[i];
  return std::move(grads.input);
}

template <typename T>
void Conv2d<T>::zero_grads() {
  grad_weight.fill(T(0));
  grad_bias.fill(T(0));
}

template <typename T>
void Conv2d<T>::collect_params(std::vector<ParamRef<T>>& out) {
  out.push_back({name_ + ".weight", &weight, &grad_weight, true});
  out.push_back({name_ + ".bias", &bias, &grad_bias, true});
}

template <typename T>
BatchNorm2d<T>::BatchNorm2d(int channels, std::string name)
    : gamma(Tensor<T>::full({channels}, T(1))),
      beta({std::vector<int>{channels}}),
      grad_gamma({std::vector<int>{channels}}),
      grad_beta({std::vector<int>{channels}}),
      running_mean({std::vector<int>{channels}}),
      running_var(Tensor<T>::full({channels}, T(1))),
      name_(std::move(name)) {}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, bool training) {
  cached_input_ = x;
  cached_training_ = training;
  return batchnorm_forward(x, gamma, beta, running_mean, running_var, training, cache_);
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad_out) {
  auto grads = batchnorm_backward(cached_input_, gamma, grad_out, cache_, cached_training_);
  for (std::int64_t i = 0; i < grad_gamma.numel(); ++i) grad_gamma[i] += grads.gamma[i];
  for (std::int64_t i = 0; i < grad_beta.numel(); ++i) grad_beta[i] += grads.beta[i];
  return std::move(grads.input);
}

template <typename T>
void BatchNorm2d<T>::zero_grads() {
  grad_gamma.fill(T(0));
  grad_beta.fill(T(0));
}

template <typename T>
void BatchNorm2d<T>::collect_params(std::vector<ParamRef<T>>& out) {
  out.push_back({name_ + ".gamma", &gamma, &grad_gamma, true});
  out.push_back({name_ + ".beta", &beta, &grad_beta, true});
  out.push_back({name_ + ".running_mean", &running_mean, nullptr, false});
  out.push_back({name_ + ".running_var", &running_var, nullptr, false});
}

template <typename T>
Linear<T>::Linear(int in_features, int out_features, std::string name)
    : weight({out_features, in_features}),
      bias({std::vector<int>{out_features}}),
      grad_weight({out_features, in_features}),
      grad_bias({std::vector<int>{out_features}}),
      name_(std::move(name)) {}

template <typename T>
void Linear<T>::init(Rng& rng) {
  const int fan_in = weight.dim(1);
  const double bound = std::sqrt(6.0 / fan_in);
  for (std::int64_t i = 0; i < weight.numel(); ++i) {
    weight[i] = static_cast<T>(rng.uniform(-bound, bound));
  }
  bias.fill(T(0));
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) {
  cached_input_ = x;
  return linear_forward(x, weight, bias, name_);
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad_out) {
  auto grads = linear_backward(cached_input_, weight, grad_out, name_);
  for (std::int64_t i = 0; i < grad_weight.numel(); ++i) grad_weight[i] += grads.weight[i];
  for (std::int64_t i = 0; i < grad_bias.numel(); ++i) grad_bias[i] += grads.bias[i];
  return std::move(grads.input);
}

template <typename T>
void Linear<T>::zero_grads() {
  grad_weight.fill(T(0));
  grad_bias.fill(T(0));
}

template <typename T>
void Linear<T>::collect_params(std::vector<ParamRef<T>>& out) {
  out.push_back({name_ + ".weight", &weight, &grad_weight, true});
  out.push_back({name_ + ".bias", &bias, &grad_bias, true});
}

// explicit instantiations: float runs the pipeline, double backs verification
#define RADARFUSE_INSTANTIATE(T)                                                                  \
  template Tensor<T> conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, \
                                       int, const std::string&);                                  \
  template Conv2dGrads<T> conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,\
                                             int, int, const std::string&);                       \
  template Tensor<T> batchnorm_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                          Tensor<T>&, Tensor<T>&, bool, BatchNormCache&, double,  \
                                          double);                                                \
  template BatchNormGrads<T> batchnorm_backward<T>(const Tensor<T>&, const Tensor<T>&,            \
                                                   const Tensor<T>&, const BatchNormCache&, bool);\
  template Tensor<T> relu_forward<T>(const Tensor<T>&);                                           \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> maxpool2_forward<T>(const Tensor<T>&, std::vector<int>&);                    \
  template Tensor<T> maxpool2_backward<T>(const std::vector<int>&, const std::vector<int>&,       \
                                          const Tensor<T>&);                                      \
  template Tensor<T> upsample_nearest2_forward<T>(const Tensor<T>&);                              \
  template Tensor<T> upsample_nearest2_backward<T>(const Tensor<T>&);                             \
  template Tensor<T> linear_forward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                       const std::string&);                                       \
  template LinearGrads<T> linear_backward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,\
                                             const std::string&);                                 \
  template Tensor<T> sigmoid_forward<T>(const Tensor<T>&);                                        \
  template Tensor<T> sigmoid_backward<T>(const Tensor<T>&, const Tensor<T>&);                     \
  template class Conv2d<T>;                                                                       \
  template class BatchNorm2d<T>;                                                                  \
  template class Linear<T>;

RADARFUSE_INSTANTIATE(float)
RADARFUSE_INSTANTIATE(double)
#undef RADARFUSE_INSTANTIATE

}  // namespace radarfuse::nn
