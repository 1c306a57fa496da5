#pragma once

#include <string>

#include <opencv2/core.hpp>

#include "fa/classifier.hpp"

namespace fa {

inline constexpr const char* kGradCam = "grad-cam";

struct SaliencyMap {
  cv::Mat values;  // CV_32F, same size as the analysed image, in [0, 1]
  std::string frame_id;
  std::string model_version;
  std::string method_id = kGradCam;
  Label explained_class = Label::not_fluorescent;
};

/// Gradient-weighted class activation map of the last residual block for the
/// class predict() assigns to the image. The whole frame is analysed (shortest
/// side resized to the model input size, no centre crop), the coarse map is
/// bilinearly upsampled to the image size and scaled so its maximum is 1.
/// An all-zero field stays all zero.
SaliencyMap compute_saliency(const ModelArtifact& artifact, const cv::Mat& image, std::string frame_id = {});

/// Blends a red ramp over the image: weight opacity*v, colour going from
/// bright to dark red as v rises. Opacity 0 or v == 0 leaves pixels untouched.
/// Throws DimensionMismatch or InvalidParams.
cv::Mat render_overlay(const cv::Mat& image, const SaliencyMap& map, double opacity);

}  // namespace fa
