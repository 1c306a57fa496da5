#include "fa/nn/tensor.hpp"

#include <algorithm>
#include <cassert>

namespace fa::nn {

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
  assert(other.shape_ == shape_);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

}  // namespace fa::nn
