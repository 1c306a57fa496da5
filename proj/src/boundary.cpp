#include "fa/boundary.hpp"

#include <algorithm>
#include <cstdio>

#include <opencv2/imgproc.hpp>

#include "fa/image_io.hpp"

namespace fa {

namespace {

const cv::Scalar kGreen(40, 200, 40);
const cv::Scalar kGrey(140, 140, 140);
const cv::Scalar kYellow(0, 255, 255);

cv::Rect strip_rect(const cv::Size& size, Axis axis, int x0, int x1) {
  return axis == Axis::horizontal ? cv::Rect(x0, 0, x1 - x0, size.height) : cv::Rect(0, x0, size.width, x1 - x0);
}

}  // namespace

NoFluorescentRegion::NoFluorescentRegion(BoundaryEstimate estimate)
    : Error(ErrorKind::NoFluorescentRegion, "no strip was classified as fluorescent"),
      estimate_(std::move(estimate)) {}

std::vector<StripInterval> tile_intervals(int extent, int strip_width) {
  if (strip_width < 1) fail(ErrorKind::InvalidParams, "strip_width must be >= 1");
  if (extent < strip_width) {
    fail(ErrorKind::ImageTooNarrow, "extent " + std::to_string(extent) + " is narrower than one strip (" +
                                        std::to_string(strip_width) + ")");
  }
  std::vector<StripInterval> out;
  out.reserve(extent / strip_width + 1);
  for (int x0 = 0, i = 0; x0 < extent; x0 += strip_width, ++i) {
    out.push_back({i, x0, std::min(x0 + strip_width, extent)});
  }
  return out;
}

std::vector<Strip> tile(const cv::Mat& image, int strip_width, Axis axis) {
  if (image.empty()) fail(ErrorKind::DecodeError, "empty image");
  const int extent = axis == Axis::horizontal ? image.cols : image.rows;
  std::vector<Strip> out;
  for (const auto& iv : tile_intervals(extent, strip_width)) {
    out.push_back({iv, image(strip_rect(image.size(), axis, iv.x0, iv.x1))});
  }
  return out;
}

std::vector<StripClassification> classify_strips(const ModelArtifact& artifact, const std::vector<Strip>& strips,
                                                 double threshold) {
  std::vector<StripClassification> out;
  out.reserve(strips.size());
  for (const auto& s : strips) {
    const auto r = predict(artifact, s.image, threshold);
    out.push_back({s.interval.index, s.interval.x0, s.interval.x1, r.probability, r.label});
  }
  return out;
}

std::vector<StripClassification> relabel(std::vector<StripClassification> strips, double threshold) {
  for (auto& s : strips) s.label = apply_threshold(s.probability, threshold);
  return strips;
}

BoundaryEstimate estimate_boundary(std::vector<StripClassification> strips, DistalDirection distal,
                                   double threshold) {
  if (strips.empty()) fail(ErrorKind::EmptyInput, "no strips to estimate a boundary from");
  std::sort(strips.begin(), strips.end(), [](const auto& a, const auto& b) { return a.x0 < b.x0; });
  for (std::size_t i = 0; i < strips.size(); ++i) {
    if (strips[i].x0 >= strips[i].x1) fail(ErrorKind::InvalidParams, "strip interval is empty");
    if (i > 0 && strips[i - 1].x1 > strips[i].x0) fail(ErrorKind::InvalidParams, "strip intervals overlap");
  }
  if (distal == DistalDirection::decreasing_x) std::reverse(strips.begin(), strips.end());
  for (std::size_t i = 0; i < strips.size(); ++i) strips[i].index = static_cast<int>(i);

  BoundaryEstimate est;
  est.distal_direction = distal;
  est.threshold = threshold;

  const auto most_distal = std::find_if(strips.rbegin(), strips.rend(),
                                        [](const auto& s) { return s.label == Label::fluorescent; });
  if (most_distal == strips.rend()) {
    est.strips = std::move(strips);
    throw NoFluorescentRegion(std::move(est));
  }
  const auto last = static_cast<std::size_t>(std::distance(most_distal, strips.rend()) - 1);
  est.boundary_x = distal == DistalDirection::increasing_x ? strips[last].x1 : strips[last].x0;
  est.contiguous = std::all_of(strips.begin(), strips.begin() + last + 1,
                               [](const auto& s) { return s.label == Label::fluorescent; });
  est.saturated = est.contiguous && last + 1 == strips.size();
  est.strips = std::move(strips);
  return est;
}

BoundaryEstimate analyze_boundary(const ModelArtifact& artifact, const cv::Mat& image, const BoundaryOptions& options) {
  const double threshold = options.threshold.value_or(artifact.threshold());
  const auto strips = tile(image, options.strip_width, options.axis);
  try {
    auto est = estimate_boundary(classify_strips(artifact, strips, threshold), options.distal, threshold);
    est.axis = options.axis;
    return est;
  } catch (const NoFluorescentRegion& e) {
    auto est = e.estimate();
    est.axis = options.axis;
    throw NoFluorescentRegion(std::move(est));
  }
}

cv::Mat render_boundary_overlay(const cv::Mat& image, const BoundaryEstimate& estimate) {
  cv::Mat out = image.clone();
  cv::Mat fill = image.clone();
  for (const auto& s : estimate.strips) {
    const auto colour = s.label == Label::fluorescent ? kGreen : kGrey;
    cv::rectangle(fill, strip_rect(image.size(), estimate.axis, s.x0, s.x1), colour, cv::FILLED);
  }
  cv::addWeighted(fill, 0.25, out, 0.75, 0.0, out);
  for (const auto& s : estimate.strips) {
    const auto colour = s.label == Label::fluorescent ? kGreen : kGrey;
    cv::Rect r = strip_rect(image.size(), estimate.axis, s.x0, s.x1);
    r.width = std::max(1, r.width - 1);
    r.height = std::max(1, r.height - 1);
    cv::rectangle(out, r, colour, 2);
  }
  if (estimate.boundary_x) {
    const int extent = estimate.axis == Axis::horizontal ? image.cols : image.rows;
    const int at = std::clamp(*estimate.boundary_x, 0, extent - 1);
    if (estimate.axis == Axis::horizontal) {
      cv::line(out, {at, 0}, {at, image.rows - 1}, kYellow, 4);
    } else {
      cv::line(out, {0, at}, {image.cols - 1, at}, kYellow, 4);
    }
  }
  return out;
}

std::vector<std::filesystem::path> export_strips(const std::vector<Strip>& strips, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  for (const auto& s : strips) {
    char name[32];
    std::snprintf(name, sizeof name, "strip_%03d.jpg", s.interval.index);
    out.push_back(dir / name);
    write_jpeg(out.back(), s.image);
  }
  return out;
}

}  // namespace fa
