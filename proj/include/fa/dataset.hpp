#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>

#include "fa/types.hpp"

namespace fa {

struct FrameRecord {
  std::string frame_id;
  std::string patient_id;
  Camera camera_id = Camera::other;
  std::filesystem::path path;
  std::optional<Label> label;  // unset straight out of ingest_video
  Split split = Split::train;
  int width = 0;
  int height = 0;
  std::optional<int> truth_boundary_x;  // synthetic frames only
};

struct SplitSummary {
  std::size_t patients = 0;
  std::size_t frames = 0;
  std::size_t positives = 0;

  /// positives / frames, 0 for an empty split.
  double positive_fraction() const;
};

/// Immutable, validated frame inventory. Construction is the only way in and
/// it rejects patient leakage across splits, unlabeled frames and duplicate
/// frame ids, so a manifest that exists is a manifest that is safe to train on.
class DatasetManifest {
public:
  static constexpr int kSchemaVersion = 1;

  DatasetManifest() = default;
  explicit DatasetManifest(std::vector<FrameRecord> records);

  const std::vector<FrameRecord>& records() const noexcept { return records_; }
  int schema_version() const noexcept { return kSchemaVersion; }
  bool empty() const noexcept { return records_.empty(); }

  std::vector<FrameRecord> split(Split which) const;
  SplitSummary summary(Split which) const;

  /// JSON Lines: a {"schema_version": N} header line, then one record per
  /// line. Paths are written relative to the manifest's directory when they
  /// live beneath it.
  void save(const std::filesystem::path& file) const;
  static DatasetManifest load(const std::filesystem::path& file);

private:
  std::vector<FrameRecord> records_;
};

DatasetManifest build_manifest(std::vector<FrameRecord> records);

/// Extracts every `sample_stride`-th frame (starting with frame 0) as PNG into
/// `out_dir`. Returned records carry provenance but no label.
std::vector<FrameRecord> ingest_video(const std::filesystem::path& video,
                                      const std::string& patient_id, Camera camera_id,
                                      int sample_stride, const std::filesystem::path& out_dir);

struct InternalSplit {
  std::vector<FrameRecord> train_part;
  std::vector<FrameRecord> val_part;
};

/// Frame-level random partition of the manifest's train split. The validation
/// part holds round(fraction * N) frames; both parts keep manifest order.
InternalSplit internal_split(const DatasetManifest& manifest, double fraction, std::uint64_t seed);

struct CropSpec {
  int crop_size = 224;
  std::uint64_t seed = 0;

  bool operator==(const CropSpec&) const = default;
};

struct CropOffset {
  int x = 0;
  int y = 0;
};

/// Top-left corner of the crop, drawn from (seed, frame_id, draw_index) only.
CropOffset crop_offset(int width, int height, const CropSpec& spec, std::string_view frame_id,
                       std::int64_t draw_index);

/// Square crop_size x crop_size sub-rectangle of `image` (deep copy).
cv::Mat random_crop(const cv::Mat& image, const CropSpec& spec, std::string_view frame_id,
                    std::int64_t draw_index);

}  // namespace fa
