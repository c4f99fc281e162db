#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vpr/tensor.hpp"

namespace vpr {

/// 8-bit interleaved image (gray or RGB).
struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  Image8() = default;
  Image8(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), pixels(w * h * c, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }

  bool operator==(const Image8&) const = default;
};

/// Decodes PNG or JPEG (by signature). Gray inputs are expanded to RGB.
/// Throws IoError for unreadable files and FormatError for undecodable data.
Image8 read_image(const std::string& path);
Image8 decode_image(std::span<const std::uint8_t> bytes);

/// Deterministic PNG encoding (fixed compression settings, no timestamps).
std::vector<std::uint8_t> encode_png(const Image8& image);
void write_png(const std::string& path, const Image8& image);
std::vector<std::uint8_t> encode_jpeg(const Image8& image, int quality = 90);
void write_jpeg(const std::string& path, const Image8& image, int quality = 90);

/// Planar float tensor with 0..255 values.
Tensor3 to_tensor(const Image8& image);
/// Rounds and clamps each value of `scale * t` into 0..255.
Image8 to_image(const Tensor3& t, float scale = 1.0f);

bool is_image_file(const std::string& path);

}  // namespace vpr
