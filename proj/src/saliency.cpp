#include "fa/saliency.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "fa/errors.hpp"

namespace fa {

SaliencyMap compute_saliency(const ModelArtifact& artifact, const cv::Mat& image, std::string frame_id) {
  if (image.empty() || image.type() != CV_8UC3) fail(ErrorKind::DecodeError, "expected an 8-bit 3-channel image");

  const auto verdict = predict(artifact, image);
  const int target = verdict.label == Label::fluorescent ? 1 : 0;

  const auto& net = artifact.network();
  const nn::Tensor features = net.features(preprocess_whole(image, artifact.preprocessing(), artifact.input_size()));
  nn::Tensor onehot({1, 2, 1, 1});
  onehot.at(0, target, 0, 0) = 1.0f;
  const nn::Tensor grad = net.head_backward(features, onehot);

  const auto& s = features.shape();
  const std::size_t plane = s.plane();
  cv::Mat cam(s.h, s.w, CV_32F, cv::Scalar(0));
  auto* out = cam.ptr<float>();
  for (int k = 0; k < s.c; ++k) {
    const float* g = grad.sample(0) + k * plane;
    double alpha = 0.0;
    for (std::size_t j = 0; j < plane; ++j) alpha += g[j];
    alpha /= static_cast<double>(plane);
    const float* a = features.sample(0) + k * plane;
    for (std::size_t j = 0; j < plane; ++j) out[j] += static_cast<float>(alpha) * a[j];
  }
  cv::max(cam, 0.0, cam);

  SaliencyMap map;
  map.frame_id = std::move(frame_id);
  map.model_version = artifact.version();
  map.explained_class = verdict.label;
  cv::resize(cam, map.values, image.size(), 0, 0, cv::INTER_LINEAR);
  cv::max(map.values, 0.0, map.values);
  double max_v = 0.0;
  cv::minMaxLoc(map.values, nullptr, &max_v);
  if (max_v > 0.0) {
    map.values /= max_v;
  } else {
    map.values.setTo(0.0);
  }
  return map;
}

cv::Mat render_overlay(const cv::Mat& image, const SaliencyMap& map, double opacity) {
  if (!(opacity >= 0.0 && opacity <= 1.0)) fail(ErrorKind::InvalidParams, "opacity must lie in [0, 1]");
  if (image.type() != CV_8UC3) fail(ErrorKind::InvalidParams, "overlay needs an 8-bit 3-channel image");
  if (map.values.size() != image.size() || map.values.type() != CV_32F) {
    fail(ErrorKind::DimensionMismatch, "saliency map and image sizes differ");
  }
  cv::Mat out = image.clone();
  if (opacity == 0.0) return out;
  for (int y = 0; y < image.rows; ++y) {
    const float* v = map.values.ptr<float>(y);
    auto* px = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.cols; ++x) {
      const double value = std::clamp<double>(v[x], 0.0, 1.0);
      const double t = opacity * value;
      if (t <= 0.0) continue;
      const double red = 255.0 - 110.0 * value;  // higher saliency, darker red
      px[x][0] = cv::saturate_cast<uchar>((1.0 - t) * px[x][0]);
      px[x][1] = cv::saturate_cast<uchar>((1.0 - t) * px[x][1]);
      px[x][2] = cv::saturate_cast<uchar>((1.0 - t) * px[x][2] + t * red);
    }
  }
  return out;
}

}  // namespace fa
