#include "fa/classifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <opencv2/imgproc.hpp>

#include "fa/detail/hash.hpp"
#include "fa/errors.hpp"
#include "fa/image_io.hpp"
#include "fa/json_io.hpp"
#include "fa/nn/optimizer.hpp"

namespace fa {

namespace {

constexpr int kFluorescent = 1;

std::string make_version(const nn::ResNet& net) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-w%d-%012llx", kResidual34, net.config().base_width,
                static_cast<unsigned long long>(net.weights_digest() & 0xffffffffffffULL));
  return buf;
}

nn::ResNetConfig network_config(const TrainConfig& config) {
  nn::ResNetConfig rc;
  rc.base_width = config.base_width;
  return rc;
}

void write_normalized(const cv::Mat& rgb, const Preprocessing& prep, float* dst) {
  const std::size_t plane = static_cast<std::size_t>(rgb.rows) * rgb.cols;
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<cv::Vec3b>(y);
    for (int x = 0; x < rgb.cols; ++x) {
      const std::size_t at = static_cast<std::size_t>(y) * rgb.cols + x;
      for (int c = 0; c < 3; ++c) dst[c * plane + at] = (row[x][c] / 255.0f - prep.mean[c]) / prep.std[c];
    }
  }
}

cv::Mat resize_shortest_side(const cv::Mat& bgr, int input_size) {
  const int w = bgr.cols, h = bgr.rows;
  const double scale = static_cast<double>(input_size) / std::min(w, h);
  const int nw = std::max(input_size, static_cast<int>(std::lround(w * scale)));
  const int nh = std::max(input_size, static_cast<int>(std::lround(h * scale)));
  cv::Mat resized;
  cv::resize(bgr, resized, cv::Size(nw, nh), 0, 0, scale < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);
  return resized;
}

void check_image(const cv::Mat& image) {
  if (image.empty() || image.type() != CV_8UC3) {
    fail(ErrorKind::DecodeError, "expected a non-empty 8-bit 3-channel image");
  }
}

}  // namespace

void validate(const TrainConfig& c) {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvalidConfig, what); };
  if (c.epochs < 1) bad("epochs must be >= 1");
  if (!(c.internal_val_fraction > 0.0 && c.internal_val_fraction < 1.0)) {
    bad("internal_val_fraction must lie in (0, 1)");
  }
  if (c.batch_size < 1) bad("batch_size must be >= 1");
  if (!(c.learning_rate > 0.0)) bad("learning_rate must be positive");
  if (c.weight_decay < 0.0) bad("weight_decay must be non-negative");
  if (c.crop.crop_size < 1) bad("crop size must be positive");
  if (c.input_size < 32) bad("input_size must be >= 32");
  if (c.base_width < 1) bad("base_width must be >= 1");
}

// ---------------------------------------------------------------- preprocessing

nn::Tensor preprocess(const cv::Mat& bgr, const Preprocessing& prep, int input_size) {
  check_image(bgr);
  const cv::Mat resized = resize_shortest_side(bgr, input_size);
  const cv::Rect centre((resized.cols - input_size) / 2, (resized.rows - input_size) / 2, input_size, input_size);
  cv::Mat rgb;
  cv::cvtColor(resized(centre), rgb, cv::COLOR_BGR2RGB);
  nn::Tensor t({1, 3, input_size, input_size});
  write_normalized(rgb, prep, t.data());
  return t;
}

nn::Tensor preprocess_whole(const cv::Mat& bgr, const Preprocessing& prep, int input_size) {
  check_image(bgr);
  cv::Mat rgb;
  cv::cvtColor(resize_shortest_side(bgr, input_size), rgb, cv::COLOR_BGR2RGB);
  nn::Tensor t({1, 3, rgb.rows, rgb.cols});
  write_normalized(rgb, prep, t.data());
  return t;
}

nn::Tensor to_input(const cv::Mat& bgr, const Preprocessing& prep, int input_size) {
  check_image(bgr);
  cv::Mat square = bgr;
  if (bgr.cols != input_size || bgr.rows != input_size) {
    const bool shrink = bgr.cols > input_size;
    cv::resize(bgr, square, cv::Size(input_size, input_size), 0, 0, shrink ? cv::INTER_AREA : cv::INTER_LINEAR);
  }
  cv::Mat rgb;
  cv::cvtColor(square, rgb, cv::COLOR_BGR2RGB);
  nn::Tensor t({1, 3, input_size, input_size});
  write_normalized(rgb, prep, t.data());
  return t;
}

// ---------------------------------------------------------------- artifact

ModelArtifact::ModelArtifact(nn::ResNet network, TrainConfig config, double threshold,
                             std::optional<TrainingReport> report)
    : threshold_(threshold), config_(std::move(config)), report_(std::move(report)), network_(std::move(network)) {
  if (!(threshold_ > 0.0 && threshold_ < 1.0)) fail(ErrorKind::InvalidConfig, "threshold must lie in (0, 1)");
  if (config_.input_size <= 0) fail(ErrorKind::InvalidConfig, "input_size must be positive");
  version_ = make_version(network_);
}

void ModelArtifact::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  network_.save_weights(dir / kWeightsName);
  nlohmann::json d;
  d["architecture_id"] = architecture_id_;
  d["input_size"] = config_.input_size;
  d["network"] = {{"blocks", network_.config().blocks},
                  {"base_width", network_.config().base_width},
                  {"num_classes", network_.config().num_classes}};
  d["preprocessing"] = preprocessing_;
  d["threshold"] = threshold_;
  d["training_config"] = config_;
  if (report_) d["training_report"] = *report_;
  d["version"] = version_;
  d["weights"] = kWeightsName;
  std::ofstream out(dir / kDescriptorName);
  if (!out) fail(ErrorKind::IoError, "cannot write descriptor in " + dir.string());
  out << d.dump(2) << '\n';
}

ModelArtifact ModelArtifact::load(const std::filesystem::path& dir) {
  const auto descriptor = dir / kDescriptorName;
  std::ifstream in(descriptor);
  if (!in) fail(ErrorKind::ArtifactCorrupt, "missing descriptor " + descriptor.string());
  try {
    const auto d = nlohmann::json::parse(in);
    if (d.at("architecture_id").get<std::string>() != kResidual34) {
      fail(ErrorKind::ArtifactCorrupt, "unsupported architecture " + d.at("architecture_id").dump());
    }
    auto config = d.at("training_config").get<TrainConfig>();
    config.input_size = d.at("input_size").get<int>();
    nn::ResNetConfig rc;
    rc.blocks = d.at("network").at("blocks").get<std::vector<int>>();
    rc.base_width = d.at("network").at("base_width").get<int>();
    rc.num_classes = d.at("network").at("num_classes").get<int>();
    if (rc.num_classes != 2) fail(ErrorKind::ArtifactCorrupt, "classifier head must have two classes");
    config.base_width = rc.base_width;

    nn::ResNet net(rc);
    net.load_weights(dir / d.at("weights").get<std::string>());
    std::optional<TrainingReport> report;
    if (d.contains("training_report")) report = d.at("training_report").get<TrainingReport>();

    ModelArtifact artifact(std::move(net), std::move(config), d.at("threshold").get<double>(), std::move(report));
    artifact.preprocessing_ = d.at("preprocessing").get<Preprocessing>();
    if (artifact.version_ != d.at("version").get<std::string>()) {
      fail(ErrorKind::ArtifactCorrupt, "weights do not match the recorded version " + d.at("version").dump());
    }
    return artifact;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ArtifactCorrupt, "bad descriptor " + descriptor.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidConfig) fail(ErrorKind::ArtifactCorrupt, e.what());
    throw;
  }
}

// ---------------------------------------------------------------- training

nn::ResNet initial_network(const TrainConfig& config, const std::optional<std::filesystem::path>& base_weights) {
  nn::ResNet net(network_config(config));
  net.init(config.seed);
  if (base_weights) {
    auto file = *base_weights;
    if (std::filesystem::is_directory(file)) file /= ModelArtifact::kWeightsName;
    net.load_trunk(file);
    net.reset_head(config.seed);
  }
  return net;
}

double weighted_cross_entropy(const nn::Tensor& logits, const std::vector<int>& targets,
                              const std::array<double, 2>& class_weights, nn::Tensor* dlogits) {
  const int n = logits.shape().n;
  const auto probs = nn::softmax(logits);
  double total_w = 0.0, loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = class_weights[targets[i]];
    total_w += w;
    loss -= w * std::log(std::max(probs[i * 2 + targets[i]], 1e-12));
  }
  if (dlogits) {
    *dlogits = nn::Tensor(logits.shape());
    for (int i = 0; i < n; ++i) {
      const double w = class_weights[targets[i]] / total_w;
      for (int k = 0; k < 2; ++k) {
        const double onehot = k == targets[i] ? 1.0 : 0.0;
        dlogits->data()[i * 2 + k] = static_cast<float>(w * (probs[i * 2 + k] - onehot));
      }
    }
  }
  return loss / total_w;
}

TrainResult train(const DatasetManifest& manifest, const TrainConfig& config, const TrainOptions& options) {
  validate(config);
  const auto t0 = std::chrono::steady_clock::now();

  const auto train_summary = manifest.summary(Split::train);
  if (train_summary.positives == 0 || train_summary.positives == train_summary.frames) {
    fail(ErrorKind::SingleClassDataset, "train split needs at least one frame of each class");
  }

  const auto parts = internal_split(manifest, config.internal_val_fraction, config.seed);
  const auto& train_part = parts.train_part;
  const auto& val_part = parts.val_part;

  TrainingReport report;
  report.train_frames = train_part.size();
  report.internal_val_frames = val_part.size();
  std::array<std::size_t, 2> counts{0, 0};
  for (const auto& r : train_part) ++counts[*r.label == Label::fluorescent ? 1 : 0];
  if (config.class_weighting) {
    for (int c = 0; c < 2; ++c) {
      report.class_weights[c] =
          counts[c] ? static_cast<double>(train_part.size()) / (2.0 * static_cast<double>(counts[c])) : 1.0;
    }
  }

  nn::ResNet net = initial_network(config, options.base_weights);
  const Preprocessing prep;
  nn::AdamW optimizer(net.params(), {.weight_decay = config.weight_decay});
  const long steps_per_epoch = (static_cast<long>(train_part.size()) + config.batch_size - 1) / config.batch_size;
  const nn::OneCycle schedule{.peak = config.learning_rate, .total_steps = steps_per_epoch * config.epochs};

  // Internal validation inputs are fixed across epochs.
  std::vector<nn::Tensor> val_inputs;
  std::vector<int> val_targets;
  for (const auto& r : val_part) {
    val_inputs.push_back(preprocess(read_image(r.path), prep, config.input_size));
    val_targets.push_back(*r.label == Label::fluorescent ? 1 : 0);
  }

  const int s = config.input_size;
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto e0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(train_part.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(detail::mix_seed(config.seed, 0xE90C0000ULL + epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const int n = static_cast<int>(std::min<std::size_t>(config.batch_size, order.size() - b));
      nn::Tensor batch({n, 3, s, s});
      std::vector<int> targets(n);
      for (int i = 0; i < n; ++i) {
        const auto& rec = train_part[order[b + i]];
        const cv::Mat crop = random_crop(read_image(rec.path), config.crop, rec.frame_id, epoch);
        const nn::Tensor x = to_input(crop, prep, s);
        std::copy(x.data(), x.data() + x.size(), batch.sample(i));
        targets[i] = *rec.label == Label::fluorescent ? 1 : 0;
      }
      nn::ResNet::Tape tape;
      const nn::Tensor logits = net.forward_train(batch, tape);
      nn::Tensor dlogits;
      const double loss = weighted_cross_entropy(logits, targets, report.class_weights, &dlogits);
      net.zero_grad();
      net.backward(tape, dlogits);
      optimizer.step(schedule.at(step++));
      loss_sum += loss * n;
      seen += n;
    }

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    if (val_inputs.empty()) {
      stats.internal_val_accuracy = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::size_t correct = 0;
      double vloss = 0.0;
      for (std::size_t i = 0; i < val_inputs.size(); ++i) {
        const auto probs = nn::softmax(net.forward_eval(val_inputs[i]));
        const double p = probs[kFluorescent];
        vloss -= std::log(std::max(val_targets[i] ? p : 1.0 - p, 1e-12));
        const int predicted = apply_threshold(p, kDefaultThreshold) == Label::fluorescent ? 1 : 0;
        if (predicted == val_targets[i]) ++correct;
      }
      stats.internal_val_loss = vloss / static_cast<double>(val_inputs.size());
      stats.internal_val_accuracy = static_cast<double>(correct) / static_cast<double>(val_inputs.size());
    }
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - e0).count();
    report.epochs.push_back(stats);
    if (options.on_epoch) options.on_epoch(stats);
  }

  report.converged = report.epochs.size() < 2 || report.epochs.back().train_loss < report.epochs.front().train_loss;
  report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  auto artifact = std::make_shared<const ModelArtifact>(std::move(net), config, kDefaultThreshold, report);
  return {std::move(artifact), std::move(report)};
}

// ---------------------------------------------------------------- inference

double fluorescent_probability(const ModelArtifact& artifact, const nn::Tensor& input) {
  return nn::softmax(artifact.network().forward_eval(input))[kFluorescent];
}

ClassificationResult predict(const ModelArtifact& artifact, const cv::Mat& image, double threshold) {
  const double p = fluorescent_probability(artifact, preprocess(image, artifact.preprocessing(), artifact.input_size()));
  return {p, apply_threshold(p, threshold), threshold, artifact.version()};
}

ClassificationResult predict(const ModelArtifact& artifact, const cv::Mat& image) {
  return predict(artifact, image, artifact.threshold());
}

std::vector<BatchItem> predict_batch(const ModelArtifact& artifact, const std::vector<cv::Mat>& images) {
  std::vector<BatchItem> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    BatchItem item;
    try {
      item.result = predict(artifact, img);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DecodeError) throw;
      item.error = e.what();
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<BatchItem> predict_batch(const ModelArtifact& artifact,
                                     const std::vector<std::filesystem::path>& image_files) {
  std::vector<BatchItem> out;
  out.reserve(image_files.size());
  for (const auto& file : image_files) {
    BatchItem item;
    try {
      item.result = predict(artifact, read_image(file));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DecodeError) throw;
      item.error = e.what();
    }
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace fa
