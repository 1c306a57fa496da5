#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fa/nn/layers.hpp"

namespace fa::nn {

struct ResNetConfig {
  /// Basic blocks per stage; {3, 4, 6, 3} is the 34-layer layout.
  std::vector<int> blocks{3, 4, 6, 3};
  /// Channels of the first stage; doubled at each later stage.
  int base_width = 64;
  int num_classes = 2;

  bool operator==(const ResNetConfig&) const = default;
};

/// Two 3x3 convolutions with batch norm and an identity or projected shortcut.
class BasicBlock {
public:
  struct Tape {
    Tensor x, c1, a1, c2, sc, out;
    BatchNorm2d::Cache bn1, bn2, bn_sc;
  };

  BasicBlock() = default;
  BasicBlock(const std::string& name, int in_channels, int out_channels, int stride);

  Tensor forward_eval(const Tensor& x) const;
  Tensor forward_train(const Tensor& x, Tape& tape);
  Tensor backward(const Tape& tape, Tensor dy);

  void collect(std::vector<Param*>& params,
               std::vector<std::pair<std::string, std::vector<float>*>>& buffers);
  void init(std::mt19937_64& rng);

private:
  Conv2d conv1_, conv2_, proj_;
  BatchNorm2d bn1_, bn2_, bn_proj_;
  bool has_proj_ = false;
};

/// Residual convolutional classifier: 7x7/2 stem, 3x3/2 max pool, four stages
/// of basic blocks, global average pool and a linear head.
class ResNet {
public:
  struct Tape {
    Tensor input, stem_act;
    BatchNorm2d::Cache stem_bn;
    std::vector<std::int32_t> pool_argmax;
    Tensor pooled;
    std::vector<BasicBlock::Tape> blocks;
    Tensor features, gap;
  };

  ResNet() = default;
  explicit ResNet(ResNetConfig config);

  const ResNetConfig& config() const noexcept { return config_; }

  /// Output of the last residual block: [n][8*base_width][h/32][w/32].
  Tensor features(const Tensor& x) const;
  Tensor head(const Tensor& features) const;
  Tensor forward_eval(const Tensor& x) const { return head(features(x)); }

  Tensor forward_train(const Tensor& x, Tape& tape);
  void backward(const Tape& tape, const Tensor& dlogits);

  /// Gradient of the logits' weighted sum with respect to the feature map,
  /// back through the pooling head only.
  Tensor head_backward(const Tensor& features, const Tensor& dlogits) const;

  void init(std::uint64_t seed);
  /// Fresh linear head, leaving the convolutional trunk untouched.
  void reset_head(std::uint64_t seed);

  std::vector<Param*> params();

  void zero_grad();
  std::size_t parameter_count() const;

  /// Raw weights file with checksum; throws ArtifactCorrupt on mismatch.
  void save_weights(const std::filesystem::path& file) const;
  void load_weights(const std::filesystem::path& file);
  /// Loads every tensor except the linear head (for transfer from a trunk
  /// trained on another task or with a different class count).
  void load_trunk(const std::filesystem::path& file);
  std::uint64_t weights_digest() const;

  /// Every serialized tensor (parameters, then running statistics) by name.
  std::vector<std::pair<std::string, const std::vector<float>*>> named_tensors() const;

private:
  std::vector<std::pair<std::string, std::vector<float>*>> named_tensors_mut();
  void read_weights(const std::filesystem::path& file, bool skip_head);

  ResNetConfig config_;
  Conv2d stem_;
  BatchNorm2d stem_bn_;
  MaxPool pool_;
  std::vector<BasicBlock> blocks_;
  Linear fc_;
};

}  // namespace fa::nn
