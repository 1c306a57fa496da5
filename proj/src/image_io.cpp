#include "fa/image_io.hpp"

#include <algorithm>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "fa/errors.hpp"

namespace fa {

namespace {

cv::Mat to_bgr8(cv::Mat img, const std::string& origin) {
  if (img.empty()) fail(ErrorKind::DecodeError, "cannot decode image: " + origin);
  if (img.depth() != CV_8U) {
    cv::Mat tmp;
    img.convertTo(tmp, CV_8U, img.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
    img = tmp;
  }
  if (img.channels() == 1) {
    cv::cvtColor(img, img, cv::COLOR_GRAY2BGR);
  } else if (img.channels() == 4) {
    cv::cvtColor(img, img, cv::COLOR_BGRA2BGR);
  }
  return img;
}

}  // namespace

cv::Mat read_image(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    fail(ErrorKind::DecodeError, "no such image file: " + path.string());
  }
  return to_bgr8(cv::imread(path.string(), cv::IMREAD_UNCHANGED), path.string());
}

cv::Mat decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) fail(ErrorKind::DecodeError, "empty image payload");
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U, const_cast<std::uint8_t*>(bytes.data()));
  return to_bgr8(cv::imdecode(buf, cv::IMREAD_UNCHANGED), "<memory>");
}

std::vector<std::uint8_t> encode_png(const cv::Mat& image) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", image, out, {cv::IMWRITE_PNG_COMPRESSION, 1})) {
    fail(ErrorKind::IoError, "PNG encoding failed");
  }
  return out;
}

void write_png(const std::filesystem::path& path, const cv::Mat& image, int compression) {
  if (!cv::imwrite(path.string(), image, {cv::IMWRITE_PNG_COMPRESSION, std::clamp(compression, 0, 9)})) {
    fail(ErrorKind::IoError, "cannot write " + path.string());
  }
}

void write_jpeg(const std::filesystem::path& path, const cv::Mat& image, int quality) {
  if (!cv::imwrite(path.string(), image, {cv::IMWRITE_JPEG_QUALITY, quality})) {
    fail(ErrorKind::IoError, "cannot write " + path.string());
  }
}

}  // namespace fa
