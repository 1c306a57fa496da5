#include "fa/nn/resnet.hpp"

#include <cstring>
#include <fstream>

#include "fa/detail/hash.hpp"
#include "fa/errors.hpp"

namespace fa::nn {

namespace {

constexpr char kMagic[4] = {'F', 'A', 'W', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void add_bn_buffers(BatchNorm2d& bn, std::vector<std::pair<std::string, std::vector<float>*>>& out) {
  std::string base = bn.gamma.name.substr(0, bn.gamma.name.size() - std::strlen(".gamma"));
  out.emplace_back(base + ".running_mean", &bn.running_mean);
  out.emplace_back(base + ".running_var", &bn.running_var);
}

}  // namespace

// ---------------------------------------------------------------- BasicBlock

BasicBlock::BasicBlock(const std::string& name, int in_channels, int out_channels, int stride)
    : conv1_(name + ".conv1", in_channels, out_channels, 3, stride, 1),
      conv2_(name + ".conv2", out_channels, out_channels, 3, 1, 1),
      bn1_(name + ".bn1", out_channels),
      bn2_(name + ".bn2", out_channels),
      has_proj_(stride != 1 || in_channels != out_channels) {
  if (has_proj_) {
    proj_ = Conv2d(name + ".proj", in_channels, out_channels, 1, stride, 0);
    bn_proj_ = BatchNorm2d(name + ".bn_proj", out_channels);
  }
}

Tensor BasicBlock::forward_eval(const Tensor& x) const {
  Tensor a = bn1_.forward_eval(conv1_.forward(x));
  relu_inplace(a);
  Tensor y = bn2_.forward_eval(conv2_.forward(a));
  if (has_proj_) {
    y += bn_proj_.forward_eval(proj_.forward(x));
  } else {
    y += x;
  }
  relu_inplace(y);
  return y;
}

Tensor BasicBlock::forward_train(const Tensor& x, Tape& tape) {
  tape.x = x;
  tape.a1 = bn1_.forward_train(conv1_.forward(x), tape.bn1);
  relu_inplace(tape.a1);
  Tensor y = bn2_.forward_train(conv2_.forward(tape.a1), tape.bn2);
  if (has_proj_) {
    y += bn_proj_.forward_train(proj_.forward(x), tape.bn_sc);
  } else {
    y += x;
  }
  relu_inplace(y);
  tape.out = y;
  return y;
}

Tensor BasicBlock::backward(const Tape& tape, Tensor dy) {
  relu_backward_inplace(tape.out, dy);
  Tensor d = bn2_.backward(tape.bn2, dy);
  d = conv2_.backward(tape.a1, d);
  relu_backward_inplace(tape.a1, d);
  d = bn1_.backward(tape.bn1, d);
  Tensor dx = conv1_.backward(tape.x, d);
  if (has_proj_) {
    dx += proj_.backward(tape.x, bn_proj_.backward(tape.bn_sc, dy));
  } else {
    dx += dy;
  }
  return dx;
}

void BasicBlock::collect(std::vector<Param*>& params,
                         std::vector<std::pair<std::string, std::vector<float>*>>& buffers) {
  params.insert(params.end(), {&conv1_.weight, &bn1_.gamma, &bn1_.beta, &conv2_.weight, &bn2_.gamma, &bn2_.beta});
  add_bn_buffers(bn1_, buffers);
  add_bn_buffers(bn2_, buffers);
  if (has_proj_) {
    params.insert(params.end(), {&proj_.weight, &bn_proj_.gamma, &bn_proj_.beta});
    add_bn_buffers(bn_proj_, buffers);
  }
}

void BasicBlock::init(std::mt19937_64& rng) {
  conv1_.init_he(rng);
  conv2_.init_he(rng);
  if (has_proj_) proj_.init_he(rng);
}

// ---------------------------------------------------------------- ResNet

ResNet::ResNet(ResNetConfig config)
    : config_(std::move(config)),
      stem_("stem.conv", 3, config_.base_width, 7, 2, 3),
      stem_bn_("stem.bn", config_.base_width) {
  int in = config_.base_width;
  for (std::size_t stage = 0; stage < config_.blocks.size(); ++stage) {
    const int out = config_.base_width << stage;
    for (int b = 0; b < config_.blocks[stage]; ++b) {
      const int stride = (stage > 0 && b == 0) ? 2 : 1;
      blocks_.emplace_back("layer" + std::to_string(stage + 1) + "." + std::to_string(b), in, out, stride);
      in = out;
    }
  }
  fc_ = Linear("fc", in, config_.num_classes);
}

Tensor ResNet::features(const Tensor& x) const {
  Tensor a = stem_bn_.forward_eval(stem_.forward(x));
  relu_inplace(a);
  Tensor h = pool_.forward(a);
  for (const auto& block : blocks_) h = block.forward_eval(h);
  return h;
}

Tensor ResNet::head(const Tensor& features) const { return fc_.forward(global_avg_pool(features)); }

Tensor ResNet::forward_train(const Tensor& x, Tape& tape) {
  tape.input = x;
  tape.stem_act = stem_bn_.forward_train(stem_.forward(x), tape.stem_bn);
  relu_inplace(tape.stem_act);
  tape.pooled = pool_.forward(tape.stem_act, &tape.pool_argmax);
  tape.blocks.resize(blocks_.size());
  const Tensor* h = &tape.pooled;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].forward_train(*h, tape.blocks[i]);
    h = &tape.blocks[i].out;
  }
  tape.features = *h;
  tape.gap = global_avg_pool(tape.features);
  return fc_.forward(tape.gap);
}

void ResNet::backward(const Tape& tape, const Tensor& dlogits) {
  Tensor d = global_avg_pool_backward(tape.features.shape(), fc_.backward(tape.gap, dlogits));
  for (std::size_t i = blocks_.size(); i-- > 0;) d = blocks_[i].backward(tape.blocks[i], std::move(d));
  d = pool_.backward(tape.stem_act.shape(), tape.pool_argmax, d);
  relu_backward_inplace(tape.stem_act, d);
  d = stem_bn_.backward(tape.stem_bn, d);
  stem_.backward(tape.input, d, /*want_input_grad=*/false);
}

Tensor ResNet::head_backward(const Tensor& features, const Tensor& dlogits) const {
  const int n = features.shape().n;
  const int c = features.shape().c;
  const int k = fc_.out_features();
  Tensor dgap({n, c, 1, 1});
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      double acc = 0.0;
      for (int o = 0; o < k; ++o) acc += static_cast<double>(dlogits.at(i, o, 0, 0)) * fc_.weight.value[o * c + ch];
      dgap.at(i, ch, 0, 0) = static_cast<float>(acc);
    }
  }
  return global_avg_pool_backward(features.shape(), dgap);
}

void ResNet::init(std::uint64_t seed) {
  std::mt19937_64 rng(detail::splitmix64(seed));
  stem_.init_he(rng);
  for (auto& b : blocks_) b.init(rng);
  reset_head(seed);
}

void ResNet::reset_head(std::uint64_t seed) {
  std::mt19937_64 rng(detail::mix_seed(seed, 0x4EADULL));
  fc_.init(rng);
}

std::vector<Param*> ResNet::params() {
  std::vector<Param*> out{&stem_.weight, &stem_bn_.gamma, &stem_bn_.beta};
  std::vector<std::pair<std::string, std::vector<float>*>> unused;
  for (auto& b : blocks_) b.collect(out, unused);
  out.push_back(&fc_.weight);
  out.push_back(&fc_.bias);
  return out;
}

std::vector<std::pair<std::string, std::vector<float>*>> ResNet::named_tensors_mut() {
  std::vector<Param*> ps{&stem_.weight, &stem_bn_.gamma, &stem_bn_.beta};
  std::vector<std::pair<std::string, std::vector<float>*>> buffers;
  add_bn_buffers(stem_bn_, buffers);
  for (auto& b : blocks_) b.collect(ps, buffers);
  ps.push_back(&fc_.weight);
  ps.push_back(&fc_.bias);

  std::vector<std::pair<std::string, std::vector<float>*>> out;
  for (auto* p : ps) out.emplace_back(p->name, &p->value);
  out.insert(out.end(), buffers.begin(), buffers.end());
  return out;
}

std::vector<std::pair<std::string, const std::vector<float>*>> ResNet::named_tensors() const {
  auto mut = const_cast<ResNet*>(this)->named_tensors_mut();
  return {mut.begin(), mut.end()};
}

void ResNet::zero_grad() {
  for (auto* p : params()) p->zero_grad();
}

std::size_t ResNet::parameter_count() const {
  std::size_t n = 0;
  for (auto* p : const_cast<ResNet*>(this)->params()) n += p->value.size();
  return n;
}

std::uint64_t ResNet::weights_digest() const {
  std::uint64_t h = detail::fnv1a64(std::string_view{});
  for (const auto& [name, values] : named_tensors()) {
    h = detail::fnv1a64(name, h);
    h = detail::fnv1a64(std::as_bytes(std::span(*values)), h);
  }
  return h;
}

void ResNet::save_weights(const std::filesystem::path& file) const {
  std::string blob(kMagic, 4);
  auto put = [&blob](const void* p, std::size_t n) { blob.append(static_cast<const char*>(p), n); };
  const auto tensors = named_tensors();
  const auto count = static_cast<std::uint32_t>(tensors.size());
  put(&kFormatVersion, sizeof kFormatVersion);
  put(&count, sizeof count);
  for (const auto& [name, values] : tensors) {
    const auto len = static_cast<std::uint32_t>(name.size());
    const auto n = static_cast<std::uint64_t>(values->size());
    put(&len, sizeof len);
    put(name.data(), name.size());
    put(&n, sizeof n);
    put(values->data(), values->size() * sizeof(float));
  }
  const std::uint64_t checksum = detail::fnv1a64(std::as_bytes(std::span(blob.data(), blob.size())));
  put(&checksum, sizeof checksum);

  std::ofstream out(file, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write weights " + file.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) fail(ErrorKind::IoError, "failed writing weights " + file.string());
}

void ResNet::read_weights(const std::filesystem::path& file, bool skip_head) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::ArtifactCorrupt, "cannot open weights " + file.string());
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto corrupt = [&file](const std::string& why) {
    fail(ErrorKind::ArtifactCorrupt, file.string() + ": " + why);
  };
  if (blob.size() < 4 + 4 + 4 + 8 || std::memcmp(blob.data(), kMagic, 4) != 0) corrupt("not a weights file");

  std::uint64_t stored = 0;
  std::memcpy(&stored, blob.data() + blob.size() - 8, 8);
  const std::size_t body = blob.size() - 8;
  if (detail::fnv1a64(std::as_bytes(std::span(blob.data(), body))) != stored) corrupt("checksum mismatch");

  std::size_t pos = 4;
  auto take = [&](void* dst, std::size_t n) {
    if (pos + n > body) corrupt("truncated");
    std::memcpy(dst, blob.data() + pos, n);
    pos += n;
  };
  std::uint32_t version = 0, count = 0;
  take(&version, sizeof version);
  take(&count, sizeof count);
  if (version != kFormatVersion) corrupt("unsupported format version " + std::to_string(version));

  auto tensors = named_tensors_mut();
  if (count != tensors.size()) corrupt("tensor count does not match the architecture");
  for (auto& [name, values] : tensors) {
    std::uint32_t len = 0;
    take(&len, sizeof len);
    std::string stored_name(len, '\0');
    take(stored_name.data(), len);
    std::uint64_t n = 0;
    take(&n, sizeof n);
    if (stored_name != name) corrupt("expected tensor '" + name + "', found '" + stored_name + "'");
    const bool is_head = name.rfind("fc.", 0) == 0;
    if (skip_head && is_head) {
      if (pos + n * sizeof(float) > body) corrupt("truncated");
      pos += n * sizeof(float);
      continue;
    }
    if (n != values->size()) corrupt("shape mismatch for '" + name + "'");
    take(values->data(), n * sizeof(float));
  }
  if (pos != body) corrupt("trailing bytes");
}

void ResNet::load_weights(const std::filesystem::path& file) { read_weights(file, false); }

void ResNet::load_trunk(const std::filesystem::path& file) { read_weights(file, true); }

}  // namespace fa::nn
