#pragma once

#include <cstdint>
#include <vector>

#include "patchmine/core.hpp"

namespace patchmine {

/// Interleaved 8-bit RGB raster.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // size = width * height * 3

  static ImageRGB filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  std::uint8_t* pixel(int x, int y) { return data.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
  bool operator==(const ImageRGB&) const = default;
};

/// Single-channel 8-bit raster.
struct ImageGray {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // size = width * height

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Single-channel float raster used by the numeric kernels.
struct ImageF {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  static ImageF zeros(int w, int h) { return {w, h, std::vector<float>(static_cast<std::size_t>(w) * h, 0.0f)}; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  /// Replicate-padded lookup.
  float at_clamped(int x, int y) const;
};

/// One video frame: RGB raster plus the derived BT.601 gray channel.
struct Frame {
  int width = 0;
  int height = 0;
  ImageRGB rgb;
  ImageGray gray;

  static Frame from_rgb(ImageRGB rgb);
  bool contains(const BoundingBox& box) const {
    return box.x >= 0 && box.y >= 0 && box.w >= 1 && box.h >= 1 && box.x + box.w <= width &&
           box.y + box.h <= height;
  }
};

/// Integer BT.601 luma: round((299 R + 587 G + 114 B) / 1000).
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

ImageGray to_gray(const ImageRGB& rgb);
ImageF to_float(const ImageGray& g);

/// Bilinear resize; edge pixels replicate.
ImageRGB resize_bilinear(const ImageRGB& src, int out_w, int out_h);
ImageF resize_bilinear(const ImageF& src, int out_w, int out_h);

/// Mean over the cell grid; used for the fixed 64x64 correlation raster.
ImageF downsample_box(const ImageGray& src, int out_w, int out_h);

/// Half-size 2x2 box downsample (pyramid step); odd trailing row/col replicate.
ImageF downsample_half(const ImageF& src);

ImageRGB crop(const ImageRGB& src, const BoundingBox& box);

}  // namespace patchmine
