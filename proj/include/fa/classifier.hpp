#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "fa/dataset.hpp"
#include "fa/nn/resnet.hpp"
#include "fa/nn/tensor.hpp"
#include "fa/types.hpp"

namespace fa {

inline constexpr double kDefaultThreshold = 0.8;
inline constexpr const char* kResidual34 = "residual-34";

/// Strict "above the threshold" rule: a probability equal to the threshold is
/// not fluorescent.
constexpr Label apply_threshold(double probability, double threshold) noexcept {
  return probability > threshold ? Label::fluorescent : Label::not_fluorescent;
}

struct Preprocessing {
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};  // RGB
  std::array<float, 3> std{0.229f, 0.224f, 0.225f};
  /// Resize so the shortest side equals input_size, then take the centred
  /// input_size square.
  std::string resize_policy = "shortest_side_center_crop";

  bool operator==(const Preprocessing&) const = default;
};

struct TrainConfig {
  int epochs = 4;
  double internal_val_fraction = 0.2;
  CropSpec crop;
  int batch_size = 16;
  /// Peak rate of the one-cycle schedule.
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  bool class_weighting = true;
  /// Network input resolution; training crops are resized to it if needed.
  int input_size = 224;
  /// First-stage channel count of the residual trunk (64 is the standard width).
  int base_width = 64;
  std::string optimizer = "adamw-onecycle";

  bool operator==(const TrainConfig&) const = default;
};

/// Throws InvalidConfig on a violated invariant.
void validate(const TrainConfig& config);

struct ClassificationResult {
  double probability = 0.0;  // of class fluorescent
  Label label = Label::not_fluorescent;
  double threshold = kDefaultThreshold;
  std::string model_version;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double internal_val_loss = 0.0;
  /// NaN when the internal validation part is empty.
  double internal_val_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainingReport {
  std::vector<EpochStats> epochs;
  std::size_t train_frames = 0;
  std::size_t internal_val_frames = 0;
  std::array<double, 2> class_weights{1.0, 1.0};
  double wall_clock_seconds = 0.0;
  /// Loss not decreasing from the first to the last epoch; reported, never thrown.
  bool converged = true;
};

/// A trained classifier together with everything needed to reproduce its
/// predictions. Immutable once built; share it by const reference or
/// shared_ptr<const ModelArtifact> across threads.
class ModelArtifact {
public:
  ModelArtifact(nn::ResNet network, TrainConfig config, double threshold = kDefaultThreshold,
                std::optional<TrainingReport> report = std::nullopt);

  const std::string& architecture_id() const noexcept { return architecture_id_; }
  int input_size() const noexcept { return config_.input_size; }
  const Preprocessing& preprocessing() const noexcept { return preprocessing_; }
  double threshold() const noexcept { return threshold_; }
  const TrainConfig& training_config() const noexcept { return config_; }
  const std::optional<TrainingReport>& training_report() const noexcept { return report_; }
  const std::string& version() const noexcept { return version_; }
  const nn::ResNet& network() const noexcept { return network_; }

  /// Directory layout: model.json descriptor plus the weights blob it names.
  void save(const std::filesystem::path& dir) const;
  /// Throws ArtifactCorrupt for a missing or inconsistent directory.
  static ModelArtifact load(const std::filesystem::path& dir);

  static constexpr const char* kDescriptorName = "model.json";
  static constexpr const char* kWeightsName = "weights.bin";

private:
  std::string architecture_id_ = kResidual34;
  Preprocessing preprocessing_;
  double threshold_ = kDefaultThreshold;
  TrainConfig config_;
  std::optional<TrainingReport> report_;
  std::string version_;
  nn::ResNet network_;
};

/// Network input for one image: resize policy applied, channels normalised.
nn::Tensor preprocess(const cv::Mat& bgr, const Preprocessing& prep, int input_size);

/// Whole-frame input: shortest side resized to input_size, aspect kept, no
/// crop. Used where spatial maps must cover the full frame.
nn::Tensor preprocess_whole(const cv::Mat& bgr, const Preprocessing& prep, int input_size);

/// Training-time input: the crop is already taken, only resized to
/// input_size (when different) and normalised.
nn::Tensor to_input(const cv::Mat& bgr, const Preprocessing& prep, int input_size);

/// Untrained network whose trunk is either loaded from `base_weights`
/// (any artifact directory or weights file with the same trunk shape) or
/// He-initialised from the seed; the two-class head is always fresh.
nn::ResNet initial_network(const TrainConfig& config, const std::optional<std::filesystem::path>& base_weights);

struct TrainOptions {
  std::optional<std::filesystem::path> base_weights;
  /// Called after every epoch; used by the CLI for its epoch counter.
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
  std::shared_ptr<const ModelArtifact> artifact;
  TrainingReport report;
};

TrainResult train(const DatasetManifest& manifest, const TrainConfig& config, const TrainOptions& options = {});

/// Class-weighted softmax cross-entropy over [n][2] logits. Writes dL/dlogits
/// into `dlogits` when non-null.
double weighted_cross_entropy(const nn::Tensor& logits, const std::vector<int>& targets,
                              const std::array<double, 2>& class_weights, nn::Tensor* dlogits);

/// Probability of class fluorescent for an already preprocessed input.
double fluorescent_probability(const ModelArtifact& artifact, const nn::Tensor& input);

ClassificationResult predict(const ModelArtifact& artifact, const cv::Mat& image);
ClassificationResult predict(const ModelArtifact& artifact, const cv::Mat& image, double threshold);

/// One entry per input, in order. Undecodable inputs yield an error marker
/// instead of aborting the batch.
struct BatchItem {
  std::optional<ClassificationResult> result;
  std::string error;  // empty on success

  bool ok() const noexcept { return result.has_value(); }
};

std::vector<BatchItem> predict_batch(const ModelArtifact& artifact, const std::vector<cv::Mat>& images);
std::vector<BatchItem> predict_batch(const ModelArtifact& artifact,
                                     const std::vector<std::filesystem::path>& image_files);

}  // namespace fa
