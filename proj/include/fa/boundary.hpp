#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <opencv2/core.hpp>

#include "fa/classifier.hpp"
#include "fa/errors.hpp"
#include "fa/types.hpp"

namespace fa {

inline constexpr int kDefaultStripWidth = 100;

/// Half-open interval [x0, x1) along the longitudinal axis; `index` is the
/// position along the axis (0 at coordinate 0).
struct StripInterval {
  int index = 0;
  int x0 = 0;
  int x1 = 0;

  bool operator==(const StripInterval&) const = default;
};

struct Strip {
  StripInterval interval;
  cv::Mat image;  // view into the source frame
};

struct StripClassification {
  /// Ordinal from the proximal end once the estimate is built; positional
  /// straight out of classify_strips.
  int index = 0;
  int x0 = 0;
  int x1 = 0;
  double probability = 0.0;
  Label label = Label::not_fluorescent;
};

struct BoundaryEstimate {
  std::optional<int> boundary_x;
  DistalDirection distal_direction = DistalDirection::increasing_x;
  Axis axis = Axis::horizontal;
  /// Ordered proximal to distal.
  std::vector<StripClassification> strips;
  /// False when a non-fluorescent strip sits proximal of the most distal
  /// fluorescent one.
  bool contiguous = true;
  /// Every strip fluorescent; boundary_x is then the distal end of the extent.
  bool saturated = false;
  double threshold = kDefaultThreshold;
};

/// Raised by estimate_boundary when no strip is fluorescent. Carries the full
/// estimate (boundary absent) so callers can still report per-strip results.
class NoFluorescentRegion : public Error {
public:
  explicit NoFluorescentRegion(BoundaryEstimate estimate);
  const BoundaryEstimate& estimate() const noexcept { return estimate_; }

private:
  BoundaryEstimate estimate_;
};

/// ceil(extent / strip_width) intervals partitioning [0, extent): full-width
/// strips plus a final remainder strip when extent % strip_width != 0.
/// Throws InvalidParams for strip_width < 1, ImageTooNarrow for extent < strip_width.
std::vector<StripInterval> tile_intervals(int extent, int strip_width);

std::vector<Strip> tile(const cv::Mat& image, int strip_width = kDefaultStripWidth, Axis axis = Axis::horizontal);

/// Classifies each strip as a standalone image; order is preserved.
std::vector<StripClassification> classify_strips(const ModelArtifact& artifact, const std::vector<Strip>& strips,
                                                 double threshold);

/// Relabels with a new threshold (strict >), keeping probabilities.
std::vector<StripClassification> relabel(std::vector<StripClassification> strips, double threshold);

/// Boundary at the distal edge of the most distal fluorescent strip.
/// Throws EmptyInput for an empty list, InvalidParams for overlapping or
/// empty intervals, NoFluorescentRegion when nothing is fluorescent.
BoundaryEstimate estimate_boundary(std::vector<StripClassification> strips, DistalDirection distal,
                                   double threshold = kDefaultThreshold);

struct BoundaryOptions {
  int strip_width = kDefaultStripWidth;
  Axis axis = Axis::horizontal;
  DistalDirection distal = DistalDirection::increasing_x;
  std::optional<double> threshold;  // artifact threshold when unset
};

/// tile -> classify_strips -> estimate_boundary. NoFluorescentRegion propagates.
BoundaryEstimate analyze_boundary(const ModelArtifact& artifact, const cv::Mat& image, const BoundaryOptions& options);

/// Green boxes over fluorescent strips, grey over the rest, and a yellow line
/// at the boundary when one exists.
cv::Mat render_boundary_overlay(const cv::Mat& image, const BoundaryEstimate& estimate);

/// Writes strips as strip_<index>.jpg; returns the written paths in order.
std::vector<std::filesystem::path> export_strips(const std::vector<Strip>& strips, const std::filesystem::path& dir);

}  // namespace fa
