#include "fa/nn/layers.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace fa::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using CMapRow = Eigen::Map<const RowMat>;

struct ConvGeom {
  int c, h, w, k, stride, pad, oh, ow;
};

void im2col(const float* x, const ConvGeom& g, float* cols) {
  const int plane = g.oh * g.ow;
  for (int c = 0; c < g.c; ++c) {
    const float* xc = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.k; ++ki) {
      for (int kj = 0; kj < g.k; ++kj) {
        float* row = cols + static_cast<std::size_t>((c * g.k + ki) * g.k + kj) * plane;
        for (int oh = 0; oh < g.oh; ++oh) {
          const int ih = oh * g.stride - g.pad + ki;
          float* out = row + oh * g.ow;
          if (ih < 0 || ih >= g.h) {
            std::fill(out, out + g.ow, 0.0f);
            continue;
          }
          const float* xrow = xc + static_cast<std::size_t>(ih) * g.w;
          for (int ow = 0; ow < g.ow; ++ow) {
            const int iw = ow * g.stride - g.pad + kj;
            out[ow] = (iw >= 0 && iw < g.w) ? xrow[iw] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im_add(const float* cols, const ConvGeom& g, float* dx) {
  const int plane = g.oh * g.ow;
  for (int c = 0; c < g.c; ++c) {
    float* dxc = dx + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.k; ++ki) {
      for (int kj = 0; kj < g.k; ++kj) {
        const float* row = cols + static_cast<std::size_t>((c * g.k + ki) * g.k + kj) * plane;
        for (int oh = 0; oh < g.oh; ++oh) {
          const int ih = oh * g.stride - g.pad + ki;
          if (ih < 0 || ih >= g.h) continue;
          float* dxrow = dxc + static_cast<std::size_t>(ih) * g.w;
          const float* in = row + oh * g.ow;
          for (int ow = 0; ow < g.ow; ++ow) {
            const int iw = ow * g.stride - g.pad + kj;
            if (iw >= 0 && iw < g.w) dxrow[iw] += in[ow];
          }
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding)
    : in_(in_channels), out_(out_channels), k_(kernel), stride_(stride), pad_(padding) {
  weight.name = name + ".weight";
  weight.resize(static_cast<std::size_t>(out_) * in_ * k_ * k_);
}

Shape Conv2d::output_shape(const Shape& in) const {
  return {in.n, out_, (in.h + 2 * pad_ - k_) / stride_ + 1, (in.w + 2 * pad_ - k_) / stride_ + 1};
}

Tensor Conv2d::forward(const Tensor& x) const {
  assert(x.shape().c == in_);
  const Shape os = output_shape(x.shape());
  Tensor y(os);
  const ConvGeom g{in_, x.shape().h, x.shape().w, k_, stride_, pad_, os.h, os.w};
  const int kdim = in_ * k_ * k_;
  const int plane = os.h * os.w;
  const bool direct = k_ == 1 && stride_ == 1 && pad_ == 0;
  std::vector<float> cols(direct ? 0 : static_cast<std::size_t>(kdim) * plane);

  CMapRow wm(weight.value.data(), out_, kdim);
  for (int i = 0; i < os.n; ++i) {
    const float* src = x.sample(i);
    if (!direct) {
      im2col(src, g, cols.data());
      src = cols.data();
    }
    MapRow ym(y.sample(i), out_, plane);
    ym.noalias() = wm * CMapRow(src, kdim, plane);
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& dy, bool want_input_grad) {
  const Shape os = dy.shape();
  const ConvGeom g{in_, x.shape().h, x.shape().w, k_, stride_, pad_, os.h, os.w};
  const int kdim = in_ * k_ * k_;
  const int plane = os.h * os.w;
  const bool direct = k_ == 1 && stride_ == 1 && pad_ == 0;
  std::vector<float> cols(direct ? 0 : static_cast<std::size_t>(kdim) * plane);
  std::vector<float> dcols(want_input_grad && !direct ? static_cast<std::size_t>(kdim) * plane : 0);

  Tensor dx;
  if (want_input_grad) dx = Tensor(x.shape());

  CMapRow wm(weight.value.data(), out_, kdim);
  MapRow dwm(weight.grad.data(), out_, kdim);
  for (int i = 0; i < os.n; ++i) {
    const float* src = x.sample(i);
    if (!direct) {
      im2col(src, g, cols.data());
      src = cols.data();
    }
    CMapRow dym(dy.sample(i), out_, plane);
    dwm.noalias() += dym * CMapRow(src, kdim, plane).transpose();
    if (want_input_grad) {
      if (direct) {
        MapRow(dx.sample(i), kdim, plane).noalias() = wm.transpose() * dym;
      } else {
        MapRow(dcols.data(), kdim, plane).noalias() = wm.transpose() * dym;
        col2im_add(dcols.data(), g, dx.sample(i));
      }
    }
  }
  return dx;
}

void Conv2d::init_he(std::mt19937_64& rng) {
  // Fan-out He initialisation, as used for residual networks.
  const double stddev = std::sqrt(2.0 / (static_cast<double>(out_) * k_ * k_));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : weight.value) v = static_cast<float>(dist(rng));
}

// ---------------------------------------------------------------- BatchNorm2d

BatchNorm2d::BatchNorm2d(std::string name, int channels) {
  gamma.name = name + ".gamma";
  beta.name = name + ".beta";
  gamma.resize(channels);
  beta.resize(channels);
  std::fill(gamma.value.begin(), gamma.value.end(), 1.0f);
  running_mean.assign(channels, 0.0f);
  running_var.assign(channels, 1.0f);
}

Tensor BatchNorm2d::forward_train(const Tensor& x, Cache& cache) {
  const Shape s = x.shape();
  const std::size_t plane = s.plane();
  const double m = static_cast<double>(s.n) * plane;
  Tensor y(s);
  cache.xhat = Tensor(s);
  cache.inv_std.assign(s.c, 0.0f);

  for (int c = 0; c < s.c; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const float* p = x.sample(n) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        sum += p[j];
        sq += static_cast<double>(p[j]) * p[j];
      }
    }
    const double mean = sum / m;
    const double var = std::max(0.0, sq / m - mean * mean);
    const float inv_std = static_cast<float>(1.0 / std::sqrt(var + eps));
    cache.inv_std[c] = inv_std;
    const float g = gamma.value[c], b = beta.value[c];
    const auto fmean = static_cast<float>(mean);
    for (int n = 0; n < s.n; ++n) {
      const float* p = x.sample(n) + c * plane;
      float* xh = cache.xhat.sample(n) + c * plane;
      float* out = y.sample(n) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        xh[j] = (p[j] - fmean) * inv_std;
        out[j] = g * xh[j] + b;
      }
    }
    const double unbiased = m > 1.0 ? var * m / (m - 1.0) : var;
    running_mean[c] = static_cast<float>((1.0 - momentum) * running_mean[c] + momentum * mean);
    running_var[c] = static_cast<float>((1.0 - momentum) * running_var[c] + momentum * unbiased);
  }
  return y;
}

Tensor BatchNorm2d::forward_eval(const Tensor& x) const {
  const Shape s = x.shape();
  const std::size_t plane = s.plane();
  Tensor y(s);
  for (int c = 0; c < s.c; ++c) {
    const float scale = gamma.value[c] / std::sqrt(running_var[c] + eps);
    const float shift = beta.value[c] - running_mean[c] * scale;
    for (int n = 0; n < s.n; ++n) {
      const float* p = x.sample(n) + c * plane;
      float* out = y.sample(n) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) out[j] = p[j] * scale + shift;
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Cache& cache, const Tensor& dy) {
  const Shape s = dy.shape();
  const std::size_t plane = s.plane();
  const double m = static_cast<double>(s.n) * plane;
  Tensor dx(s);
  for (int c = 0; c < s.c; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const float* d = dy.sample(n) + c * plane;
      const float* xh = cache.xhat.sample(n) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        sum_dy += d[j];
        sum_dy_xhat += static_cast<double>(d[j]) * xh[j];
      }
    }
    gamma.grad[c] += static_cast<float>(sum_dy_xhat);
    beta.grad[c] += static_cast<float>(sum_dy);
    const float g = gamma.value[c];
    const float k = g * cache.inv_std[c];
    const auto mean_dy = static_cast<float>(sum_dy / m);
    const auto mean_dy_xhat = static_cast<float>(sum_dy_xhat / m);
    for (int n = 0; n < s.n; ++n) {
      const float* d = dy.sample(n) + c * plane;
      const float* xh = cache.xhat.sample(n) + c * plane;
      float* out = dx.sample(n) + c * plane;
      for (std::size_t j = 0; j < plane; ++j) out[j] = k * (d[j] - mean_dy - xh[j] * mean_dy_xhat);
    }
  }
  return dx;
}

// ---------------------------------------------------------------- activations, pooling

void relu_inplace(Tensor& x) {
  for (auto& v : x.span()) v = v > 0.0f ? v : 0.0f;
}

void relu_backward_inplace(const Tensor& y, Tensor& dy) {
  const float* yp = y.data();
  float* d = dy.data();
  for (std::size_t i = 0; i < dy.size(); ++i) {
    if (!(yp[i] > 0.0f)) d[i] = 0.0f;
  }
}

Tensor MaxPool::forward(const Tensor& x, std::vector<std::int32_t>* argmax) const {
  const Shape s = x.shape();
  const Shape os{s.n, s.c, (s.h + 2 - 3) / 2 + 1, (s.w + 2 - 3) / 2 + 1};
  Tensor y(os);
  if (argmax) argmax->assign(os.size(), 0);
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * s.plane();
      const float* xp = x.data() + base;
      for (int oh = 0; oh < os.h; ++oh) {
        for (int ow = 0; ow < os.w; ++ow, ++o) {
          float best = -std::numeric_limits<float>::infinity();
          std::size_t best_idx = 0;
          for (int ki = 0; ki < 3; ++ki) {
            const int ih = oh * 2 - 1 + ki;
            if (ih < 0 || ih >= s.h) continue;
            for (int kj = 0; kj < 3; ++kj) {
              const int iw = ow * 2 - 1 + kj;
              if (iw < 0 || iw >= s.w) continue;
              const std::size_t idx = static_cast<std::size_t>(ih) * s.w + iw;
              if (xp[idx] > best) {
                best = xp[idx];
                best_idx = idx;
              }
            }
          }
          y.data()[o] = best;
          if (argmax) (*argmax)[o] = static_cast<std::int32_t>(base + best_idx);
        }
      }
    }
  }
  return y;
}

Tensor MaxPool::backward(const Shape& in, const std::vector<std::int32_t>& argmax, const Tensor& dy) const {
  Tensor dx(in);
  for (std::size_t o = 0; o < dy.size(); ++o) dx.data()[argmax[o]] += dy.data()[o];
  return dx;
}

Tensor global_avg_pool(const Tensor& x) {
  const Shape s = x.shape();
  Tensor y({s.n, s.c, 1, 1});
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* p = x.sample(n) + c * plane;
      double sum = 0.0;
      for (std::size_t j = 0; j < plane; ++j) sum += p[j];
      y.at(n, c, 0, 0) = static_cast<float>(sum / static_cast<double>(plane));
    }
  }
  return y;
}

Tensor global_avg_pool_backward(const Shape& in, const Tensor& dy) {
  Tensor dx(in);
  const std::size_t plane = in.plane();
  const float inv = 1.0f / static_cast<float>(plane);
  for (int n = 0; n < in.n; ++n) {
    for (int c = 0; c < in.c; ++c) {
      const float g = dy.at(n, c, 0, 0) * inv;
      float* p = dx.sample(n) + c * plane;
      std::fill(p, p + plane, g);
    }
  }
  return dx;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(std::string name, int in_features, int out_features) : in_(in_features), out_(out_features) {
  weight.name = name + ".weight";
  bias.name = name + ".bias";
  weight.resize(static_cast<std::size_t>(out_) * in_);
  bias.resize(out_);
}

Tensor Linear::forward(const Tensor& x) const {
  const int n = x.shape().n;
  assert(static_cast<int>(x.shape().sample_size()) == in_);
  Tensor y({n, out_, 1, 1});
  CMapRow xm(x.data(), n, in_);
  CMapRow wm(weight.value.data(), out_, in_);
  MapRow ym(y.data(), n, out_);
  ym.noalias() = xm * wm.transpose();
  for (int i = 0; i < n; ++i) {
    for (int o = 0; o < out_; ++o) ym(i, o) += bias.value[o];
  }
  return y;
}

Tensor Linear::backward(const Tensor& x, const Tensor& dy) {
  const int n = x.shape().n;
  CMapRow xm(x.data(), n, in_);
  CMapRow dym(dy.data(), n, out_);
  MapRow(weight.grad.data(), out_, in_).noalias() += dym.transpose() * xm;
  for (int i = 0; i < n; ++i) {
    for (int o = 0; o < out_; ++o) bias.grad[o] += dym(i, o);
  }
  Tensor dx(x.shape());
  MapRow(dx.data(), n, in_).noalias() = dym * CMapRow(weight.value.data(), out_, in_);
  return dx;
}

void Linear::init(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : weight.value) v = static_cast<float>(dist(rng));
  for (auto& v : bias.value) v = static_cast<float>(dist(rng));
}

std::vector<double> softmax(const Tensor& logits) {
  const int n = logits.shape().n;
  const int k = static_cast<int>(logits.shape().sample_size());
  std::vector<double> out(logits.size());
  for (int i = 0; i < n; ++i) {
    const float* l = logits.sample(i);
    const float mx = *std::max_element(l, l + k);
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(static_cast<double>(l[j] - mx));
    for (int j = 0; j < k; ++j) {
      out[i * k + j] = std::exp(static_cast<double>(l[j] - mx)) / z;
    }
  }
  return out;
}

}  // namespace fa::nn
