#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace fa {

/// Decodes an image file into an 8-bit, 3-channel BGR raster.
/// Throws DecodeError when the file is missing or not a decodable image.
cv::Mat read_image(const std::filesystem::path& path);

/// Same as read_image, from an in-memory PNG/JPEG byte buffer.
cv::Mat decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const cv::Mat& image);

/// `compression` is the zlib level 0-9; 0 trades disk for much faster IO.
void write_png(const std::filesystem::path& path, const cv::Mat& image, int compression = 1);
void write_jpeg(const std::filesystem::path& path, const cv::Mat& image, int quality = 95);

}  // namespace fa
