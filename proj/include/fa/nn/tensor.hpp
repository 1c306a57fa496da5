#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fa::nn {

struct Shape {
  int n = 0, c = 0, h = 0, w = 0;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t sample_size() const noexcept { return static_cast<std::size_t>(c) * h * w; }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
};

/// Dense float32 NCHW tensor.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f) : shape_(shape), data_(shape.size(), fill) {}

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }

  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> span() noexcept { return data_; }
  std::span<const float> span() const noexcept { return data_; }

  float* sample(int i) noexcept { return data_.data() + i * shape_.sample_size(); }
  const float* sample(int i) const noexcept { return data_.data() + i * shape_.sample_size(); }

  float& at(int n, int c, int h, int w) noexcept {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }
  float at(int n, int c, int h, int w) const noexcept {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }

  void fill(float v);
  Tensor& operator+=(const Tensor& other);

private:
  Shape shape_;
  std::vector<float> data_;
};

}  // namespace fa::nn
