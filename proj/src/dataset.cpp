#include "fa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "fa/detail/hash.hpp"
#include "fa/errors.hpp"
#include "fa/image_io.hpp"
#include "fa/json_io.hpp"

namespace fa {

double SplitSummary::positive_fraction() const {
  return frames == 0 ? 0.0 : static_cast<double>(positives) / static_cast<double>(frames);
}

DatasetManifest::DatasetManifest(std::vector<FrameRecord> records) : records_(std::move(records)) {
  std::unordered_set<std::string> ids;
  std::map<std::string, Split> patient_split;
  for (const auto& r : records_) {
    if (!r.label) fail(ErrorKind::UnlabeledFrame, "frame '" + r.frame_id + "' has no label");
    if (!ids.insert(r.frame_id).second) {
      fail(ErrorKind::DuplicateFrameId, "frame id '" + r.frame_id + "' appears twice");
    }
    auto [it, inserted] = patient_split.emplace(r.patient_id, r.split);
    if (!inserted && it->second != r.split) {
      fail(ErrorKind::SplitLeakage, "patient '" + r.patient_id + "' appears in both train and holdout");
    }
  }
}

std::vector<FrameRecord> DatasetManifest::split(Split which) const {
  std::vector<FrameRecord> out;
  std::copy_if(records_.begin(), records_.end(), std::back_inserter(out),
               [which](const FrameRecord& r) { return r.split == which; });
  return out;
}

SplitSummary DatasetManifest::summary(Split which) const {
  SplitSummary s;
  std::set<std::string> patients;
  for (const auto& r : records_) {
    if (r.split != which) continue;
    ++s.frames;
    if (r.label == Label::fluorescent) ++s.positives;
    patients.insert(r.patient_id);
  }
  s.patients = patients.size();
  return s;
}

void DatasetManifest::save(const std::filesystem::path& file) const {
  const auto base = std::filesystem::absolute(file).parent_path();
  std::ofstream out(file);
  if (!out) fail(ErrorKind::IoError, "cannot open " + file.string() + " for writing");
  out << nlohmann::json{{"schema_version", kSchemaVersion}}.dump() << '\n';
  for (auto r : records_) {
    const auto abs = std::filesystem::absolute(r.path).lexically_normal();
    const auto rel = abs.lexically_relative(base);
    if (!rel.empty() && *rel.begin() != "..") r.path = rel;
    out << nlohmann::json(r).dump() << '\n';
  }
  if (!out) fail(ErrorKind::IoError, "failed writing " + file.string());
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorKind::IoError, "cannot open manifest " + file.string());
  const auto base = std::filesystem::absolute(file).parent_path();

  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::IoError, "manifest is empty: " + file.string());
  try {
    const auto header = nlohmann::json::parse(line);
    const int version = header.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      fail(ErrorKind::IoError, "unsupported manifest schema_version " + std::to_string(version));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::IoError, std::string("bad manifest header: ") + e.what());
  }

  std::vector<FrameRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto r = nlohmann::json::parse(line).get<FrameRecord>();
      if (r.path.is_relative()) r.path = base / r.path;
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::IoError, "manifest line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return DatasetManifest(std::move(records));
}

DatasetManifest build_manifest(std::vector<FrameRecord> records) {
  return DatasetManifest(std::move(records));
}

std::vector<FrameRecord> ingest_video(const std::filesystem::path& video, const std::string& patient_id,
                                      Camera camera_id, int sample_stride,
                                      const std::filesystem::path& out_dir) {
  require(sample_stride >= 1, ErrorKind::InvalidParams, "sample_stride must be >= 1");
  if (!std::filesystem::is_regular_file(video)) {
    fail(ErrorKind::DecodeError, "no such video file: " + video.string());
  }
  cv::VideoCapture cap(video.string());
  if (!cap.isOpened()) fail(ErrorKind::DecodeError, "cannot decode video " + video.string());

  std::filesystem::create_directories(out_dir);
  std::vector<FrameRecord> records;
  cv::Mat frame;
  long index = 0;
  while (cap.read(frame)) {
    if (frame.empty()) break;
    if (index % sample_stride == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "_f%06ld", index);
      FrameRecord r;
      r.frame_id = patient_id + name;
      r.patient_id = patient_id;
      r.camera_id = camera_id;
      r.path = out_dir / (r.frame_id + ".png");
      r.width = frame.cols;
      r.height = frame.rows;
      cv::Mat bgr = frame;
      if (frame.channels() == 1) cv::cvtColor(frame, bgr, cv::COLOR_GRAY2BGR);
      write_png(r.path, bgr);
      records.push_back(std::move(r));
    }
    ++index;
  }
  if (index == 0) fail(ErrorKind::EmptyVideo, "video has no decodable frames: " + video.string());
  return records;
}

InternalSplit internal_split(const DatasetManifest& manifest, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    fail(ErrorKind::InvalidFraction, "internal split fraction must lie in (0, 1)");
  }
  auto train = manifest.split(Split::train);
  const std::size_t n = train.size();
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(detail::splitmix64(seed));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<bool> in_val(n, false);
  for (std::size_t i = 0; i < n_val; ++i) in_val[order[i]] = true;

  InternalSplit out;
  out.val_part.reserve(n_val);
  out.train_part.reserve(n - n_val);
  for (std::size_t i = 0; i < n; ++i) {
    (in_val[i] ? out.val_part : out.train_part).push_back(std::move(train[i]));
  }
  return out;
}

CropOffset crop_offset(int width, int height, const CropSpec& spec, std::string_view frame_id,
                       std::int64_t draw_index) {
  if (spec.crop_size < 1 || spec.crop_size > std::min(width, height)) {
    fail(ErrorKind::CropTooLarge, "crop " + std::to_string(spec.crop_size) + " does not fit a " +
                                      std::to_string(width) + "x" + std::to_string(height) + " frame");
  }
  std::uint64_t s = detail::mix_seed(spec.seed, detail::fnv1a64(frame_id));
  s = detail::mix_seed(s, static_cast<std::uint64_t>(draw_index));
  std::mt19937_64 rng(s);
  CropOffset off;
  off.x = std::uniform_int_distribution<int>(0, width - spec.crop_size)(rng);
  off.y = std::uniform_int_distribution<int>(0, height - spec.crop_size)(rng);
  return off;
}

cv::Mat random_crop(const cv::Mat& image, const CropSpec& spec, std::string_view frame_id,
                    std::int64_t draw_index) {
  const auto off = crop_offset(image.cols, image.rows, spec, frame_id, draw_index);
  return image(cv::Rect(off.x, off.y, spec.crop_size, spec.crop_size)).clone();
}

}  // namespace fa
