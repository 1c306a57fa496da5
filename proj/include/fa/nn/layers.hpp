#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fa/nn/tensor.hpp"

namespace fa::nn {

/// Trainable parameter and its accumulated gradient.
struct Param {
  std::string name;
  std::vector<float> value;
  std::vector<float> grad;

  void resize(std::size_t n) {
    value.assign(n, 0.0f);
    grad.assign(n, 0.0f);
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }
};

/// Bias-free 2-D convolution (every convolution here is followed by batch norm).
class Conv2d {
public:
  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding);

  Shape output_shape(const Shape& in) const;
  Tensor forward(const Tensor& x) const;

  /// Accumulates the weight gradient; returns dL/dx unless `want_input_grad`
  /// is false, in which case an empty tensor comes back.
  Tensor backward(const Tensor& x, const Tensor& dy, bool want_input_grad = true);

  void init_he(std::mt19937_64& rng);

  int in_channels() const noexcept { return in_; }
  int out_channels() const noexcept { return out_; }

  Param weight;  // [out][in][k][k]

private:
  int in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
};

class BatchNorm2d {
public:
  struct Cache {
    Tensor xhat;
    std::vector<float> inv_std;
  };

  BatchNorm2d() = default;
  BatchNorm2d(std::string name, int channels);

  /// Normalizes with batch statistics and updates the running estimates.
  Tensor forward_train(const Tensor& x, Cache& cache);
  Tensor forward_eval(const Tensor& x) const;
  Tensor backward(const Cache& cache, const Tensor& dy);

  Param gamma;
  Param beta;
  std::vector<float> running_mean;
  std::vector<float> running_var;
  float momentum = 0.1f;
  float eps = 1e-5f;
};

void relu_inplace(Tensor& x);
/// dy *= (y > 0), where y is the ReLU output.
void relu_backward_inplace(const Tensor& y, Tensor& dy);

/// 3x3, stride 2, padding 1 max pooling (the residual-network stem pool).
class MaxPool {
public:
  Tensor forward(const Tensor& x, std::vector<std::int32_t>* argmax = nullptr) const;
  Tensor backward(const Shape& in, const std::vector<std::int32_t>& argmax, const Tensor& dy) const;
};

/// Global average pooling to [n][c][1][1].
Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const Shape& in, const Tensor& dy);

class Linear {
public:
  Linear() = default;
  Linear(std::string name, int in_features, int out_features);

  /// x is read as [n][in_features] regardless of its spatial dims.
  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy);
  void init(std::mt19937_64& rng);

  int in_features() const noexcept { return in_; }
  int out_features() const noexcept { return out_; }

  Param weight;  // [out][in]
  Param bias;

private:
  int in_ = 0, out_ = 0;
};

/// Row-wise normalized exponential of [n][k] logits.
std::vector<double> softmax(const Tensor& logits);

}  // namespace fa::nn
